#include "archface/synthetic.hpp"

#include "archface/errors.hpp"
#include "archface/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace archface::synthetic {

namespace fs = std::filesystem;

std::vector<double> gaussian_vector(std::size_t dim, Rng& rng) {
    std::vector<double> v(dim);
    for (auto& x : v) x = rng.normal();
    return v;
}

FaceEmbedding random_unit(std::size_t dim, Rng& rng) { return FaceEmbedding::normalized(gaussian_vector(dim, rng)); }

FaceEmbedding at_similarity(const FaceEmbedding& target, double similarity, Rng& rng) {
    if (target.dim() < 2) throw ConfigError("at_similarity needs at least two dimensions");
    const double s = std::clamp(similarity, -1.0, 1.0);
    // Random direction orthogonal to the target (one Gram-Schmidt step).
    std::vector<double> u;
    double norm = 0.0;
    do {
        u = gaussian_vector(target.dim(), rng);
        double along = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) along += u[i] * target[i];
        norm = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            u[i] -= along * target[i];
            norm += u[i] * u[i];
        }
    } while (norm < 1e-12);
    norm = std::sqrt(norm);
    const double across = std::sqrt(std::max(0.0, 1.0 - s * s));
    std::vector<double> out(target.dim());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * target[i] + across * u[i] / norm;
    return FaceEmbedding::normalized(std::move(out));
}

std::vector<VerificationPair> verification_pairs(SimilarityDistribution positives, std::size_t positive_count,
                                                 SimilarityDistribution negatives, std::size_t negative_count,
                                                 std::size_t dim, Rng& rng) {
    std::vector<VerificationPair> pairs;
    pairs.reserve(positive_count + negative_count);
    auto emit = [&](SimilarityDistribution d, std::size_t count, bool same) {
        for (std::size_t i = 0; i < count; ++i) {
            const double s = std::clamp(rng.normal(d.mean, d.stddev), -1.0, 1.0);
            auto a = random_unit(dim, rng);
            auto b = at_similarity(a, s, rng);
            pairs.push_back({std::move(a), std::move(b), same});
        }
    };
    emit(positives, positive_count, true);
    emit(negatives, negative_count, false);
    return pairs;
}

GaussianClasses gaussian_classes(std::size_t classes, std::size_t train_per_class, std::size_t test_per_class,
                                 std::size_t dim, double separation, double noise, Rng& rng) {
    GaussianClasses out;
    for (std::size_t c = 0; c < classes; ++c) {
        const auto dir = random_unit(dim, rng);
        std::vector<double> centre(dim);
        for (std::size_t i = 0; i < dim; ++i) centre[i] = separation * dir[i];
        out.centres.push_back(std::move(centre));
    }
    auto draw = [&](std::size_t c) {
        LabeledSample s{std::vector<double>(dim), c};
        for (std::size_t i = 0; i < dim; ++i) s.input[i] = out.centres[c][i] + noise * rng.normal();
        return s;
    };
    for (std::size_t c = 0; c < classes; ++c) {
        for (std::size_t i = 0; i < train_per_class; ++i) out.train.push_back(draw(c));
        for (std::size_t i = 0; i < test_per_class; ++i) out.test.push_back(draw(c));
    }
    return out;
}

SampleSet noisy_sample_set(const std::string& entity_id, const NoisySetParams& p, Rng& rng) {
    const auto identity = random_unit(p.dim, rng);
    // The impostor identity is orthogonal to the true one.
    const auto impostor = at_similarity(identity, 0.0, rng);

    SampleSet set{entity_id, entity_id, {}, std::nullopt};
    auto face_id = [&](std::size_t i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "#%04zu", i);
        return entity_id + buf;
    };
    const std::size_t total = p.true_faces + p.impostor_faces;
    // Interleave deterministically so true faces and impostors are mixed.
    std::vector<bool> is_true(total, false);
    std::fill(is_true.begin(), is_true.begin() + static_cast<std::ptrdiff_t>(p.true_faces), true);
    rng.shuffle(is_true);
    for (std::size_t i = 0; i < total; ++i) {
        const bool real = is_true[i];
        const auto& centre = real ? identity : impostor;
        const auto spread = real ? p.true_spread : p.impostor_spread;
        set.faces.push_back({face_id(i), entity_id,
                             at_similarity(centre, std::clamp(rng.normal(spread.mean, spread.stddev), -1.0, 1.0), rng),
                             "synthetic", real, std::nullopt});
    }
    set.faces.push_back({face_id(total), entity_id, at_similarity(identity, p.reference_similarity, rng),
                         "synthetic-portrait", true, std::nullopt});
    set.reference_face_id = set.faces.back().face_id;
    return set;
}

namespace {

Json raw_json(const FaceEmbedding& e) { return Json(std::vector<double>(e.values().begin(), e.values().end())); }

std::string numbered(const char* fmt, std::size_t n) {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, n);
    return buf;
}

struct DemoEntity {
    const char* id;
    const char* name;
    int birth_year;
    std::uint64_t views;
};

constexpr DemoEntity kDemoEntities[] = {
    {"Q9000001", "Anna Berger", 1954, 912000},   {"Q9000002", "Lukas Wagner", 1961, 455000},
    {"Q9000003", "Marta Keller", 1948, 455000},  {"Q9000004", "Jonas Richter", 1970, 301000},
    {"Q9000005", "Sofia Brandt", 1966, 120500},  {"Q9000006", "Felix Hartmann", 1959, 98000},
    {"Q9000007", "Otto Lindner", 1915, 500000}, // born before the cut-off
};

} // namespace

void write_demo(const fs::path& dir, std::uint64_t seed) {
    constexpr std::size_t dim = kDefaultEmbeddingDim;
    Rng rng(seed);
    fs::create_directories(dir / "samples");
    fs::create_directories(dir / "corpus");

    std::vector<FaceEmbedding> identities;
    for (std::size_t i = 0; i < std::size(kDemoEntities); ++i) identities.push_back(random_unit(dim, rng));

    Json bindings = Json::array();
    for (const auto& e : kDemoEntities) {
        bindings.push_back({{"item", {{"type", "uri"}, {"value", std::string("http://www.wikidata.org/entity/") + e.id}}},
                            {"itemLabel", {{"type", "literal"}, {"value", e.name}}},
                            {"birthYear", {{"type", "literal"}, {"value", std::to_string(e.birth_year)}}},
                            {"views", {{"type", "literal"}, {"value", std::to_string(e.views)}}}});
    }
    write_file_atomic(dir / "entities.json",
                      dump_pretty(Json{{"head", {{"vars", {"item", "itemLabel", "birthYear", "views"}}}},
                                       {"results", {{"bindings", bindings}}}}));

    Json images = Json::object();
    const std::string placeholder = "placeholder image\n";

    // Sample images: about two thirds show the entity, the rest show a
    // recurring companion; some show both. One portrait per entity.
    std::string annotations;
    for (std::size_t e = 0; e < std::size(kDemoEntities); ++e) {
        const std::string id = kDemoEntities[e].id;
        const auto companion = random_unit(dim, rng);
        fs::create_directories(dir / "samples" / id);
        for (std::size_t i = 0; i <= 15; ++i) {
            const std::string name = i == 15 ? id + "-portrait.jpg" : id + numbered("-img%03zu.jpg", i);
            write_file_atomic(dir / "samples" / id / name, placeholder);
            Json faces = Json::array();
            const double roll = i == 15 ? 0.0 : rng.uniform();
            auto add = [&](const FaceEmbedding& centre, double sim, bool truth) {
                annotations += Json{{"face_id", id + "/" + name + "#" + std::to_string(faces.size())},
                                    {"ground_truth", truth}}.dump() + "\n";
                faces.push_back({{"box", {static_cast<int>(10 + 80 * faces.size()), 20, 64, 64}},
                                 {"embedding", raw_json(at_similarity(centre, sim, rng))}});
            };
            if (i == 15) {
                add(identities[e], 0.98, true);
            } else {
                if (roll < 0.67) add(identities[e], rng.normal(0.9, 0.02), true);
                if (roll >= 0.55) add(companion, rng.normal(0.9, 0.02), false);
            }
            images[name] = faces;
        }
    }
    write_file_atomic(dir / "annotations.jsonl", annotations);

    // Archive corpus.
    static constexpr const char* kHosts[] = {"www.welt.de", "img.welt.de", "www.bild.de", "www.example.com"};
    static constexpr const char* kMimes[] = {"image/jpeg", "image/jpeg", "image/png", "image/gif"};
    static constexpr int kYears[] = {2012, 2013, 2013, 2013, 2014};
    std::string manifest = "# url timestamp mime digest locator\n";
    std::vector<std::string> undecodable;
    for (std::size_t i = 0; i < 80; ++i) {
        const std::string host = kHosts[rng.below(std::size(kHosts))];
        const std::string mime = kMimes[rng.below(std::size(kMimes))];
        const int year = kYears[rng.below(std::size(kYears))];
        const std::string name = numbered("img%04zu", i) + (mime == "image/png" ? ".png" : mime == "image/gif" ? ".gif" : ".jpg");
        char ts[32];
        std::snprintf(ts, sizeof ts, "%04d%02d%02d%02d%02d%02d", year, static_cast<int>(1 + rng.below(12)),
                      static_cast<int>(1 + rng.below(28)), static_cast<int>(rng.below(24)),
                      static_cast<int>(rng.below(60)), static_cast<int>(rng.below(60)));
        // Every tenth image repeats an earlier capture's content.
        const std::string digest = (i % 10 == 9) ? numbered("sha1:DEMO%04zu", i - 5) : numbered("sha1:DEMO%04zu", i);
        manifest += "http://" + host + "/media/" + name + " " + ts + " " + mime + " " + digest + " corpus/" + name + "\n";
        write_file_atomic(dir / "corpus" / name, placeholder);

        if (i % 37 == 36) {
            undecodable.push_back(name);
            continue;
        }
        Json faces = Json::array();
        const std::size_t count = rng.below(4);
        for (std::size_t f = 0; f < count; ++f) {
            FaceEmbedding face = rng.uniform() < 0.7
                                     ? at_similarity(identities[rng.below(identities.size() - 1)], rng.normal(0.93, 0.02), rng)
                                     : random_unit(dim, rng);
            faces.push_back({{"box", {static_cast<int>(20 + 90 * f), 30, 72, 72}}, {"embedding", raw_json(face)}});
        }
        images[name] = faces;
    }
    write_file_atomic(dir / "manifest.txt", manifest);
    write_file_atomic(dir / "provider.json", Json{{"images", images}, {"undecodable", undecodable}}.dump() + "\n");
}

} // namespace archface::synthetic
