#ifndef DCVACONF_TESTS_SUPPORT_HPP
#define DCVACONF_TESTS_SUPPORT_HPP

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <unistd.h>
#include <vector>

#include "dcvaconf/dcvaconf.hpp"

namespace testing_support {

/// Fresh directory removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("dcvaconf_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
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

inline std::vector<unsigned char> read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& p, const std::vector<unsigned char>& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

inline dcvaconf::Raster random_raster(std::size_t w, std::size_t h, std::size_t bands, std::uint64_t seed,
                                      double lo = 0.0, double hi = 1.0) {
    dcvaconf::SeqRng rng(seed);
    dcvaconf::Raster r(w, h, bands);
    for (float& v : r.data()) v = static_cast<float>(rng.uniform(lo, hi));
    return r;
}

/// Small synthetic scene, already jointly normalized.
struct Pair {
    dcvaconf::Raster x1;
    dcvaconf::Raster x2;
    dcvaconf::LabelMap reference;
};

inline Pair small_scene(std::uint64_t seed, std::size_t size = 48) {
    dcvaconf::SceneSpec spec;
    spec.width = size;
    spec.height = size;
    spec.seed = seed;
    dcvaconf::Scene s = dcvaconf::generate(spec);
    auto [a, b] = dcvaconf::normalize_pair(std::move(s.t1), std::move(s.t2));
    return {std::move(a), std::move(b), std::move(s.reference)};
}

/// Restores the library thread limit when leaving scope.
struct ThreadLimit {
    explicit ThreadLimit(std::size_t n) { dcvaconf::set_max_threads(n); }
    ~ThreadLimit() { dcvaconf::set_max_threads(0); }
};

}  // namespace testing_support

#endif
