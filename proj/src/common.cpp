#include "mealmeter/common.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace mealmeter {

// ---- time ----------------------------------------------------------------

namespace {

// Howard Hinnant's civil-date algorithms; valid across the whole int range.
int64_t days_from_civil(int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);            // [0, 399]
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;  // [0, 365]
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;           // [0, 146096]
    return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

void civil_from_days(int64_t z, int64_t& y, unsigned& m, unsigned& d) {
    z += 719468;
    const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y += m <= 2;
}

} // namespace

double parse_iso8601_utc(std::string_view s) {
    s = trim(s);
    int y = 0, mo = 0, d = 0, h = 0, mi = 0;
    double sec = 0.0;
    std::array<char, 64> buf{};
    if (s.size() >= buf.size())
        throw data_error("timestamp too long: '" + std::string(s) + "'");
    std::memcpy(buf.data(), s.data(), s.size());
    int consumed = 0;
    if (std::sscanf(buf.data(), "%4d-%2d-%2dT%2d:%2d:%lf%n", &y, &mo, &d, &h, &mi, &sec, &consumed) != 6)
        throw data_error("invalid ISO-8601 timestamp: '" + std::string(s) + "'");
    std::string_view rest = trim(s.substr(static_cast<std::size_t>(consumed)));
    if (!(rest.empty() || rest == "Z" || rest == "+00:00"))
        throw data_error("timestamp must be UTC ('Z'): '" + std::string(s) + "'");
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || sec < 0.0 || sec >= 61.0)
        throw data_error("timestamp field out of range: '" + std::string(s) + "'");
    const int64_t days = days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d));
    return static_cast<double>(days * 86400 + h * 3600 + mi * 60) + sec;
}

std::string format_iso8601_utc(double epoch_seconds) {
    const double whole = std::floor(epoch_seconds);
    double frac = epoch_seconds - whole;
    auto total = static_cast<int64_t>(whole);
    int64_t days = total / 86400;
    int64_t rem = total % 86400;
    if (rem < 0) {
        rem += 86400;
        days -= 1;
    }
    int64_t y = 0;
    unsigned mo = 0, d = 0;
    civil_from_days(days, y, mo, d);
    const int h = static_cast<int>(rem / 3600);
    const int mi = static_cast<int>((rem % 3600) / 60);
    const int s = static_cast<int>(rem % 60);
    char buf[48];
    if (frac > 0.0) {
        // millisecond precision is enough for every sampling rate in scope
        int ms = static_cast<int>(std::lround(frac * 1000.0));
        int ss = s;
        if (ms >= 1000) {
            ms = 0;
            ss += 1;
        }
        std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02d:%02d:%02d.%03dZ",
                      static_cast<long long>(y), mo, d, h, mi, ss, ms);
    } else {
        std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02d:%02d:%02dZ",
                      static_cast<long long>(y), mo, d, h, mi, s);
    }
    return buf;
}

// ---- numbers ---------------------------------------------------------------

std::string format_double(double v) {
    char buf[40];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, p);
}

std::string format_double_fixed(double v, int decimals) {
    if (decimals < 0)
        return format_double(v);
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, decimals);
    (void)ec;
    return std::string(buf, p);
}

void append_double(std::string& out, double v, int decimals) {
    char buf[64];
    char* p = nullptr;
    if (decimals < 0)
        p = std::to_chars(buf, buf + sizeof buf, v).ptr;
    else
        p = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, decimals).ptr;
    out.append(buf, static_cast<std::size_t>(p - buf));
}

bool try_parse_double(std::string_view field, double& out) {
    field = trim(field);
    if (field.empty())
        return false;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [p, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || p != last)
        return false;
    return true;
}

// ---- text -------------------------------------------------------------------

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const std::size_t comma = line.find(',', pos);
        if (comma == std::string_view::npos) {
            out.push_back(trim(line.substr(pos)));
            break;
        }
        out.push_back(trim(line.substr(pos, comma - pos)));
        pos = comma + 1;
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw data_error("cannot open file: " + path.string());
    std::string contents;
    in.seekg(0, std::ios::end);
    contents.resize(static_cast<std::size_t>(in.tellg()));
    in.seekg(0);
    in.read(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!in)
        throw data_error("read failed: " + path.string());
    return contents;
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw data_error("cannot write file: " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out)
            throw data_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

// ---- randomness --------------------------------------------------------------

uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

uint64_t mix_seed(uint64_t seed, uint64_t a, uint64_t b, uint64_t c) {
    uint64_t s = seed;
    (void)splitmix64(s);
    s ^= 0x9e3779b97f4a7c15ULL * (a + 1);
    (void)splitmix64(s);
    s ^= 0xc2b2ae3d27d4eb4fULL * (b + 1);
    (void)splitmix64(s);
    s ^= 0x165667b19e3779f9ULL * (c + 1);
    return splitmix64(s);
}

Rng::Rng(uint64_t seed) {
    uint64_t sm = seed;
    for (auto& w : s_)
        w = splitmix64(sm);
}

static inline uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

uint64_t Rng::next() {
    const uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

uint64_t Rng::bounded(uint64_t n) {
    if (n == 0)
        throw numeric_error("bounded(0) is undefined");
    const uint64_t threshold = (0ULL - n) % n;
    while (true) {
        const uint64_t r = next();
        if (r >= threshold)
            return r % n;
    }
}

double Rng::uniform() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

double Rng::normal(double mean, double sd) {
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return mean + sd * cached_normal_;
    }
    // Marsaglia polar: trig-free, two normals per accepted pair
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    cached_normal_ = v * f;
    has_cached_normal_ = true;
    return mean + sd * u * f;
}

} // namespace mealmeter
