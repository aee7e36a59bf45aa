#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>

namespace testutil {

/// Self-deleting temporary directory.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        dir_ = std::filesystem::temp_directory_path() /
               ("veritrail_" + tag + "_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(dir_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(dir_, ec);
    }
    const std::filesystem::path& path() const { return dir_; }

private:
    std::filesystem::path dir_;
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
}

inline std::filesystem::path fixtures_dir() {
    if (const char* env = std::getenv("VERITRAIL_FIXTURES"))
        return env;
    return std::filesystem::path(__FILE__).parent_path().parent_path() / "fixtures";
}

/// Synthetic text of n word tokens: "w0 w1 w2 ...". Each wK tokenizes to a
/// single token.
inline std::string synthetic_tokens(std::size_t n, std::uint64_t seed = 0) {
    std::mt19937_64 gen(seed ^ 0x9e3779b97f4a7c15ULL);
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0)
            out += ' ';
        out += 'w' + std::to_string(gen() % 999);
    }
    return out;
}

} // namespace testutil
