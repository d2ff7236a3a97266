#pragma once
// CLI-side plumbing: RAII over the C handles, status -> exit-code mapping,
// and the deterministic CSV/JSON writers (17 significant digits).

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qcl/qcl.h"

namespace cli {

// exit codes promised to test harnesses
enum ExitCode : int {
    kOk = 0,
    kFailure = 1,        // I/O and anything unclassified
    kConfig = 2,         // config / argument / validation problems
    kNoSeed = 3,         // seed sampling exhausted
    kArcTransition = 4,  // feedback denominator hit its floor
    kLineSearch = 5,     // ascent line search failed
};

struct CliError : std::runtime_error {
    int exit_code;
    CliError(int code, std::string msg) : std::runtime_error(std::move(msg)), exit_code(code) {}
};

inline int exit_code_for(qcl_status st) {
    switch (st) {
        case QCL_OK:
            return kOk;
        case QCL_ERR_ARGUMENT:
        case QCL_ERR_VALIDATION:
        case QCL_ERR_UNDER_RESOLVED:
        case QCL_ERR_ORDER_CAP:
        case QCL_ERR_NOT_ON_SURFACE:
            return kConfig;
        case QCL_ERR_NO_SEED:
            return kNoSeed;
        case QCL_ERR_ARC_TRANSITION:
            return kArcTransition;
        default:
            return kFailure;
    }
}

inline void check(qcl_status st, const char* what) {
    if (st == QCL_OK) return;
    throw CliError(exit_code_for(st), std::string(what) + ": " + qcl_last_error_message());
}

// --- RAII handles ------------------------------------------------------------

struct SystemDeleter {
    void operator()(qcl_system* p) const { qcl_system_destroy(p); }
};
struct ControlDeleter {
    void operator()(qcl_control* p) const { qcl_control_destroy(p); }
};
struct TrajectoryDeleter {
    void operator()(qcl_trajectory* p) const { qcl_trajectory_destroy(p); }
};
struct SeedDeleter {
    void operator()(qcl_seed* p) const { qcl_seed_destroy(p); }
};
struct ExtremalDeleter {
    void operator()(qcl_extremal* p) const { qcl_extremal_destroy(p); }
};
struct AscentDeleter {
    void operator()(qcl_ascent* p) const { qcl_ascent_destroy(p); }
};
struct TrapDeleter {
    void operator()(qcl_trap* p) const { qcl_trap_destroy(p); }
};

using SystemPtr = std::unique_ptr<qcl_system, SystemDeleter>;
using ControlPtr = std::unique_ptr<qcl_control, ControlDeleter>;
using TrajectoryPtr = std::unique_ptr<qcl_trajectory, TrajectoryDeleter>;
using SeedPtr = std::unique_ptr<qcl_seed, SeedDeleter>;
using ExtremalPtr = std::unique_ptr<qcl_extremal, ExtremalDeleter>;
using AscentPtr = std::unique_ptr<qcl_ascent, AscentDeleter>;
using TrapPtr = std::unique_ptr<qcl_trap, TrapDeleter>;

// --- formatting ---------------------------------------------------------------

inline std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// Ordered, pretty-printed JSON emitter. Non-finite doubles become null.
class JsonWriter {
  public:
    JsonWriter() { out_.reserve(1 << 12); }

    JsonWriter& begin_object() {
        prefix();
        out_ += '{';
        stack_.push_back(0);
        return *this;
    }
    JsonWriter& end_object() { return close('}'); }
    JsonWriter& begin_array() {
        prefix();
        out_ += '[';
        stack_.push_back(0);
        return *this;
    }
    JsonWriter& end_array() { return close(']'); }

    JsonWriter& key(std::string_view k) {
        prefix();
        quote(k);
        out_ += ": ";
        after_key_ = true;
        return *this;
    }
    JsonWriter& value(double x) {
        prefix();
        out_ += std::isfinite(x) ? fmt(x) : "null";
        return *this;
    }
    JsonWriter& value(std::int64_t x) {
        prefix();
        out_ += std::to_string(x);
        return *this;
    }
    JsonWriter& value(std::uint64_t x) {
        prefix();
        out_ += std::to_string(x);
        return *this;
    }
    JsonWriter& value(int x) { return value(static_cast<std::int64_t>(x)); }
    JsonWriter& value(bool b) {
        prefix();
        out_ += b ? "true" : "false";
        return *this;
    }
    JsonWriter& value(std::string_view s) {
        prefix();
        quote(s);
        return *this;
    }
    // Without this overload a string literal would take the bool overload
    // (pointer-to-bool is a standard conversion, string_view's constructor is
    // not) and serialize as `true`.
    JsonWriter& value(const char* s) { return value(std::string_view(s)); }

    std::string take() {
        out_ += '\n';
        return std::move(out_);
    }

  private:
    void prefix() {
        if (after_key_) {
            after_key_ = false;
            return;
        }
        if (stack_.empty()) return;
        if (stack_.back()++) out_ += ',';
        out_ += '\n';
        out_.append(2 * stack_.size(), ' ');
    }
    JsonWriter& close(char c) {
        const bool had = stack_.back() > 0;
        stack_.pop_back();
        if (had) {
            out_ += '\n';
            out_.append(2 * stack_.size(), ' ');
        }
        out_ += c;
        return *this;
    }
    void quote(std::string_view s) {
        out_ += '"';
        for (char ch : s) {
            if (ch == '"' || ch == '\\') {
                out_ += '\\';
                out_ += ch;
            } else if (static_cast<unsigned char>(ch) < 0x20) {
                char buf[8];
                std::snprintf(buf, sizeof buf, "\\u%04x", ch);
                out_ += buf;
            } else {
                out_ += ch;
            }
        }
        out_ += '"';
    }

    std::string out_;
    std::vector<int> stack_;
    bool after_key_ = false;
};

// --- file I/O -----------------------------------------------------------------

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw CliError(kFailure, "cannot open " + path.string() + " for writing");
    os << content;
    if (!os) throw CliError(kFailure, "write failed: " + path.string());
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw CliError(kFailure, "cannot open " + path.string());
    std::string s((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    if (is.bad()) throw CliError(kFailure, "read failed: " + path.string());
    return s;
}

// --- control CSV ---------------------------------------------------------------

struct ParsedControl {
    double duration = 0.0;
    std::vector<double> samples;
};

// Serializes midpoint samples under the pinned "t,epsilon" header.
inline std::string control_csv(double duration, const double* samples, std::int64_t m) {
    std::string s = "t,epsilon\n";
    const double h = duration / static_cast<double>(m);
    for (std::int64_t j = 0; j < m; ++j) {
        s += fmt((static_cast<double>(j) + 0.5) * h);
        s += ',';
        s += fmt(samples[j]);
        s += '\n';
    }
    return s;
}

inline std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(std::move(line));
        start = end + 1;
    }
    return lines;
}

inline double parse_double(const std::string& field, const std::string& where) {
    try {
        std::size_t used = 0;
        const double v = std::stod(field, &used);
        if (used != field.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw CliError(kConfig, where + ": cannot parse number '" + field + "'");
    }
}

// Reads a control CSV back; the grid is reconstructed from the midpoint times.
inline ParsedControl read_control_csv(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    const auto lines = split_lines(text);
    const std::string where = "control file " + path.string();
    if (lines.empty() || lines[0] != "t,epsilon")
        throw CliError(kConfig, where + ": expected header 't,epsilon'");
    ParsedControl pc;
    std::vector<double> times;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw CliError(kConfig, where + ": row " + std::to_string(i) + " has no comma");
        const std::string row = where + ", row " + std::to_string(i);
        times.push_back(parse_double(line.substr(0, comma), row));
        pc.samples.push_back(parse_double(line.substr(comma + 1), row));
    }
    if (pc.samples.empty()) throw CliError(kConfig, where + ": no samples");
    const double h = 2.0 * times[0];
    if (!(h > 0.0)) throw CliError(kConfig, where + ": first midpoint time must be positive");
    const auto m = static_cast<double>(pc.samples.size());
    pc.duration = m * h;
    for (std::size_t j = 0; j < times.size(); ++j) {
        const double expect = (static_cast<double>(j) + 0.5) * h;
        if (std::abs(times[j] - expect) > 1e-9 * std::max(1.0, pc.duration))
            throw CliError(kConfig, where + ": times are not uniform interval midpoints");
    }
    return pc;
}

}  // namespace cli
