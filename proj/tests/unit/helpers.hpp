#pragma once

#include "archface/embedding.hpp"
#include "archface/random.hpp"

#include <unistd.h>

#include <filesystem>
#include <initializer_list>
#include <string>
#include <vector>

namespace testing {

inline archface::FaceEmbedding emb(std::initializer_list<double> v) {
    return archface::FaceEmbedding::normalized(std::vector<double>(v));
}

inline std::filesystem::path fixture(const std::string& name) {
    return std::filesystem::path(ARCHFACE_FIXTURES) / name;
}

// Fresh directory removed on scope exit.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("archface-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

// Independent reference math, deliberately naive.
inline double naive_dot(const std::vector<double>& a, const std::vector<double>& b) {
    long double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
    return static_cast<double>(s);
}

inline std::vector<double> as_vector(const archface::FaceEmbedding& e) {
    return {e.values().begin(), e.values().end()};
}

} // namespace testing
