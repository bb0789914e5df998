#include "archface/face_provider.hpp"

#include "archface/errors.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>
#include <thread>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace archface {

namespace fs = std::filesystem;

namespace {

BoundingBox parse_box(const Json& j) {
    if (!j.is_array() || j.size() != 4) throw ParseError("face box must be [x, y, w, h]");
    BoundingBox box{j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
    return box;
}

FaceEmbedding parse_embedding(const Json& j) {
    if (!j.is_array() || j.empty()) throw ParseError("embedding must be a non-empty array");
    return FaceEmbedding::normalized(j.get<std::vector<double>>());
}

Json box_json(const BoundingBox& b) { return Json::array({b.x, b.y, b.w, b.h}); }

Json embedding_json(const FaceEmbedding& e) { return Json(std::vector<double>(e.values().begin(), e.values().end())); }

} // namespace

std::vector<DetectedFace> parse_provider_response(const Json& response) {
    if (response.is_object() && response.contains("error")) {
        throw DecodeError(response["error"].is_string() ? response["error"].get<std::string>()
                                                        : response["error"].dump());
    }
    if (!response.is_array()) throw ProviderError("provider response must be a JSON array");
    std::vector<DetectedFace> faces;
    try {
        for (const auto& item : response) {
            faces.push_back({parse_box(item.at("box")), parse_embedding(item.at("embedding"))});
        }
    } catch (const Json::exception& e) {
        throw ProviderError(std::string("malformed provider response: ") + e.what());
    } catch (const ParseError& e) {
        throw ProviderError(std::string("malformed provider response: ") + e.what());
    } catch (const NormalizationError& e) {
        throw ProviderError(std::string("provider returned a degenerate embedding: ") + e.what());
    }
    return faces;
}

Json provider_response_json(std::span<const DetectedFace> faces) {
    Json out = Json::array();
    for (const auto& f : faces) out.push_back({{"box", box_json(f.box)}, {"embedding", embedding_json(f.embedding)}});
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic provider

SyntheticProvider::SyntheticProvider(const Json& script) {
    try {
        if (script.contains("images")) {
            for (const auto& [locator, faces] : script.at("images").items()) {
                script_[locator] = parse_provider_response(faces);
            }
        }
        if (script.contains("undecodable")) {
            for (const auto& locator : script.at("undecodable")) undecodable_.insert(locator.get<std::string>());
        }
    } catch (const Json::exception& e) {
        throw ParseError(std::string("bad provider script: ") + e.what());
    } catch (const Error& e) {
        throw ParseError(std::string("bad provider script: ") + e.what());
    }
}

SyntheticProvider SyntheticProvider::from_file(const fs::path& path) {
    try {
        return SyntheticProvider(Json::parse(read_text_file(path)));
    } catch (const Json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void SyntheticProvider::add(const std::string& locator, std::vector<DetectedFace> faces) {
    script_[locator] = std::move(faces);
}

void SyntheticProvider::mark_undecodable(const std::string& locator) { undecodable_.insert(locator); }

std::vector<DetectedFace> SyntheticProvider::detect(const std::string& locator) {
    for (const std::string& key : {locator, fs::path(locator).filename().string()}) {
        if (undecodable_.contains(key)) throw DecodeError("cannot decode " + locator);
        if (const auto it = script_.find(key); it != script_.end()) return it->second;
    }
    throw DecodeError("no scripted detections for " + locator);
}

// ---------------------------------------------------------------------------
// External process provider

class ExternalProcessProvider::Child {
public:
    explicit Child(const std::string& command) {
        int to_child[2];
        int from_child[2];
        if (::pipe2(to_child, O_CLOEXEC) != 0) throw ProviderError(std::string("pipe: ") + std::strerror(errno));
        if (::pipe2(from_child, O_CLOEXEC) != 0) {
            ::close(to_child[0]);
            ::close(to_child[1]);
            throw ProviderError(std::string("pipe: ") + std::strerror(errno));
        }
        pid_ = ::fork();
        if (pid_ < 0) {
            for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) ::close(fd);
            throw ProviderError(std::string("fork: ") + std::strerror(errno));
        }
        if (pid_ == 0) {
            ::dup2(to_child[0], STDIN_FILENO);
            ::dup2(from_child[1], STDOUT_FILENO);
            ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
            ::_exit(127);
        }
        ::close(to_child[0]);
        ::close(from_child[1]);
        stdin_fd_ = to_child[1];
        stdout_fd_ = from_child[0];
    }

    ~Child() {
        if (stdin_fd_ >= 0) ::close(stdin_fd_);
        if (stdout_fd_ >= 0) ::close(stdout_fd_);
        // EOF on stdin asks the child to exit; give it a moment before SIGKILL.
        for (int i = 0; i < 50; ++i) {
            if (::waitpid(pid_, nullptr, WNOHANG) == pid_) return;
            std::this_thread::sleep_for(std::chrono::milliseconds(10));
        }
        ::kill(pid_, SIGKILL);
        ::waitpid(pid_, nullptr, 0);
    }

    Child(const Child&) = delete;
    Child& operator=(const Child&) = delete;

    void write_line(const std::string& line) {
        const std::string payload = line + "\n";
        std::size_t sent = 0;
        while (sent < payload.size()) {
            const auto n = ::write(stdin_fd_, payload.data() + sent, payload.size() - sent);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw ProviderError(std::string("write to provider: ") + std::strerror(errno));
            }
            sent += static_cast<std::size_t>(n);
        }
    }

    std::string read_line(std::chrono::milliseconds timeout) {
        for (;;) {
            if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
                std::string line = buffer_.substr(0, nl);
                buffer_.erase(0, nl + 1);
                return line;
            }
            pollfd pfd{stdout_fd_, POLLIN, 0};
            const int ready = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
            if (ready == 0) throw ProviderError("provider did not answer in time");
            if (ready < 0) {
                if (errno == EINTR) continue;
                throw ProviderError(std::string("poll: ") + std::strerror(errno));
            }
            char chunk[4096];
            const auto n = ::read(stdout_fd_, chunk, sizeof chunk);
            if (n < 0 && errno == EINTR) continue;
            if (n <= 0) throw ProviderError("provider closed its output");
            buffer_.append(chunk, static_cast<std::size_t>(n));
        }
    }

private:
    pid_t pid_ = -1;
    int stdin_fd_ = -1;
    int stdout_fd_ = -1;
    std::string buffer_;
};

ExternalProcessProvider::ExternalProcessProvider(std::string command, std::size_t max_processes)
    : command_(std::move(command)), max_processes_(std::max<std::size_t>(1, max_processes)) {
    if (command_.empty()) throw ConfigError("external provider needs a command");
    // A provider that exits early must surface as a write error, not kill us.
    std::signal(SIGPIPE, SIG_IGN);
}

ExternalProcessProvider::~ExternalProcessProvider() = default;

std::unique_ptr<ExternalProcessProvider::Child> ExternalProcessProvider::checkout() {
    std::unique_lock lock(mutex_);
    available_.wait(lock, [&] { return !idle_.empty() || started_ < max_processes_; });
    if (!idle_.empty()) {
        auto child = std::move(idle_.back());
        idle_.pop_back();
        return child;
    }
    ++started_;
    lock.unlock();
    try {
        return std::make_unique<Child>(command_);
    } catch (...) {
        std::lock_guard relock(mutex_);
        --started_;
        available_.notify_one();
        throw;
    }
}

void ExternalProcessProvider::checkin(std::unique_ptr<Child> child) {
    std::lock_guard lock(mutex_);
    if (child) {
        idle_.push_back(std::move(child));
    } else {
        --started_;
    }
    available_.notify_one();
}

std::vector<DetectedFace> ExternalProcessProvider::detect(const std::string& locator) {
    if (locator.find('\n') != std::string::npos) throw DecodeError("locator contains a newline");
    auto child = checkout();
    Json response;
    try {
        child->write_line(locator);
        const std::string line = child->read_line(std::chrono::minutes(2));
        response = Json::parse(line);
    } catch (const Json::exception& e) {
        checkin(nullptr);
        throw ProviderError(std::string("provider answered with invalid JSON: ") + e.what());
    } catch (...) {
        checkin(nullptr);
        throw;
    }
    checkin(std::move(child));
    return parse_provider_response(response);
}

// ---------------------------------------------------------------------------
// Detection drivers

std::vector<FaceObservation> detect_and_embed(const ImageRecord& record, FaceProvider& provider,
                                              std::optional<std::size_t> expected_dim) {
    auto faces = provider.detect(record.locator);
    std::vector<FaceObservation> out;
    out.reserve(faces.size());
    for (std::size_t i = 0; i < faces.size(); ++i) {
        auto& face = faces[i];
        if (face.box.w <= 0 || face.box.h <= 0) {
            throw DecodeError("face " + std::to_string(i) + " in " + record.locator + " has an empty box");
        }
        if (expected_dim) require_same_dim(*expected_dim, face.embedding.dim(), "detected face");
        out.push_back({record.key(), i, face.box, std::move(face.embedding)});
    }
    return out;
}

CorpusScan scan_corpus(std::span<const ImageRecord> records, FaceProvider& provider, std::size_t workers,
                       std::optional<std::size_t> expected_dim) {
    // One scan per capture; repeated keys would collide on (image, face_index).
    std::vector<const ImageRecord*> unique;
    {
        std::set<ImageKey> seen;
        for (const auto& r : records) {
            if (seen.insert(r.key()).second) unique.push_back(&r);
        }
    }

    struct Slot {
        std::vector<FaceObservation> faces;
        std::optional<std::string> failure;
    };
    std::vector<Slot> slots(unique.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < unique.size(); i = next++) {
            try {
                slots[i].faces = detect_and_embed(*unique[i], provider, expected_dim);
            } catch (const DecodeError& e) {
                slots[i].failure = std::string("decode: ") + e.what();
            } catch (const Error& e) {
                slots[i].failure = e.what();
            }
        }
    };
    const std::size_t threads = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(1, unique.size()));
    {
        std::vector<std::jthread> pool;
        for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(work);
        work();
    }

    std::vector<std::size_t> order(unique.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return unique[a]->key() < unique[b]->key(); });

    CorpusScan scan;
    for (const std::size_t i : order) {
        if (slots[i].failure) {
            spdlog::warn("skipping {} {}: {}", unique[i]->url, unique[i]->capture_timestamp, *slots[i].failure);
            scan.failures.push_back({unique[i]->key(), *slots[i].failure});
            continue;
        }
        scan.images.push_back(unique[i]->key());
        for (auto& obs : slots[i].faces) scan.observations.push_back(std::move(obs));
    }
    return scan;
}

std::string observation_id(const FaceObservation& obs) {
    return obs.image.url + "|" + obs.image.timestamp + "|" + std::to_string(obs.face_index);
}

void write_embedding_manifest(const fs::path& path, std::size_t embedding_dim,
                              std::span<const FaceObservation> observations) {
    std::string text =
        Json{{"format", "archface-embeddings"}, {"version", 1}, {"embedding_dim", embedding_dim}}.dump() + "\n";
    for (const auto& obs : observations) {
        require_same_dim(embedding_dim, obs.embedding.dim(), "embedding manifest");
        text += Json{{"id", observation_id(obs)},
                     {"url", obs.image.url},
                     {"timestamp", obs.image.timestamp},
                     {"face_index", obs.face_index},
                     {"box", box_json(obs.box)},
                     {"embedding", embedding_json(obs.embedding)}}
                    .dump() +
                "\n";
    }
    write_file_atomic(path, text);
}

EmbeddingManifest read_embedding_manifest(const fs::path& path) {
    EmbeddingManifest out;
    bool have_header = false;
    for_each_jsonl(path, [&](const Json& j, std::size_t line) {
        if (!j.contains("embedding")) {
            if (j.contains("embedding_dim") && !have_header) {
                out.embedding_dim = j["embedding_dim"].get<std::size_t>();
                have_header = true;
            }
            return;
        }
        if (!have_header) {
            throw ParseError(path.string() + ":" + std::to_string(line) + ": embedding before header");
        }
        const std::string id = j.contains("id") ? j["id"].get<std::string>() : j.at("face_id").get<std::string>();
        auto embedding = FaceEmbedding::normalized(j["embedding"].get<std::vector<double>>());
        require_same_dim(out.embedding_dim, embedding.dim(), "embedding manifest");
        if (j.contains("url") && j.contains("timestamp")) {
            out.observations.push_back({{j["url"].get<std::string>(), j["timestamp"].get<std::string>()},
                                        j.value("face_index", std::size_t{0}),
                                        j.contains("box") ? parse_box(j["box"]) : BoundingBox{},
                                        embedding});
        }
        out.ids.push_back(id);
        out.embeddings.push_back(std::move(embedding));
    });
    if (!have_header) throw ParseError(path.string() + ": missing embedding_dim header");
    return out;
}

} // namespace archface
