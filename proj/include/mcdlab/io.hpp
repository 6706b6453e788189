#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "mcdlab/datasets.hpp"
#include "mcdlab/errors.hpp"
#include "mcdlab/mc.hpp"
#include "mcdlab/optim.hpp"

namespace mcdlab {

/// Shortest decimal form that round-trips the exact double. CSV output goes
/// through here so artifacts are byte-stable.
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << content;
    if (!out) throw Error("failed writing " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string to_csv(const LossTrace& trace) {
    std::string out = "epoch,mean_loss\n";
    for (std::size_t i = 0; i < trace.epoch_mean_loss.size(); ++i)
        out += std::to_string(i) + "," + format_double(trace.epoch_mean_loss[i]) + "\n";
    return out;
}

inline std::string to_csv(const MCResult& result) {
    std::string out = "x,mean,sigma\n";
    for (const auto& p : result.points)
        out += format_double(p.x) + "," + format_double(p.sample_mean) + "," +
               format_double(p.sigma()) + "\n";
    return out;
}

inline std::string to_csv(const Dataset& data) {
    std::string out;
    if (data.xs) {
        out = "x,y\n";
        for (std::size_t i = 0; i < data.n; ++i)
            out += format_double((*data.xs)[i]) + "," + format_double(data.ys[i]) + "\n";
    } else {
        out = "y\n";
        for (std::size_t i = 0; i < data.n; ++i) out += format_double(data.ys[i]) + "\n";
    }
    return out;
}

}  // namespace mcdlab
