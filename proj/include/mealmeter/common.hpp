#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mealmeter {

// Error taxonomy maps onto the CLI exit-code contract:
// config_error -> 2, parse_error/data_error -> 3, numeric_error -> 4.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct parse_error : data_error {
    parse_error(const std::string& file, std::size_t line, const std::string& what)
        : data_error(file + ":" + std::to_string(line) + ": " + what), file(file), line(line) {}
    std::string file;
    std::size_t line;
};

struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---- time ----------------------------------------------------------------

/// Parse "YYYY-MM-DDTHH:MM:SS[.fff]Z" (UTC) to epoch seconds. Throws data_error.
double parse_iso8601_utc(std::string_view s);

/// Format epoch seconds as ISO-8601 UTC. Sub-second part emitted only if present.
std::string format_iso8601_utc(double epoch_seconds);

// ---- numbers -------------------------------------------------------------

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

/// Fixed-point with `decimals` digits (decimals < 0 -> shortest round-trip).
std::string format_double_fixed(double v, int decimals);

/// Append without an intermediate string (hot path for channel emission).
void append_double(std::string& out, double v, int decimals = -1);

/// Strict full-field double parse; returns false on trailing junk or empty field.
bool try_parse_double(std::string_view field, double& out);

// ---- small text helpers ----------------------------------------------------

std::vector<std::string_view> split_csv_line(std::string_view line);
std::string_view trim(std::string_view s);

/// Read a whole file; throws data_error if missing/unreadable.
std::string read_file(const std::filesystem::path& path);

/// Write atomically (temp file + rename) so failed stages leave no partial outputs.
void write_file(const std::filesystem::path& path, std::string_view contents);

// ---- seeded randomness -----------------------------------------------------

uint64_t splitmix64(uint64_t& state);

/// Mix values into a single substream seed (order-sensitive).
uint64_t mix_seed(uint64_t seed, uint64_t a, uint64_t b = 0, uint64_t c = 0);

/// Deterministic generator with explicit algorithms for every draw, so output
/// is identical across platforms and standard-library versions.
class Rng {
  public:
    explicit Rng(uint64_t seed);

    uint64_t next();                      // 64 random bits
    uint64_t bounded(uint64_t n);         // uniform in [0, n), rejection sampled
    double uniform();                     // [0, 1)
    double uniform(double lo, double hi); // [lo, hi)
    double normal(double mean = 0.0, double sd = 1.0); // Box-Muller

  private:
    uint64_t s_[4]; // xoshiro256**
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

} // namespace mealmeter
