#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kfs/fewshot.hpp"

namespace kfs {

namespace detail {

// 17 significant digits round-trips any double exactly.
inline std::string full_precision(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& s, const std::string& key) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    const auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || p != last) {
        throw std::runtime_error("model file: bad numeric value for '" + key + "'");
    }
    return v;
}

inline std::vector<double> parse_vector_line(const std::string& line, const std::string& key) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= line.size()) {
        std::size_t comma = line.find(',', pos);
        if (comma == std::string::npos) comma = line.size();
        out.push_back(parse_double(line.substr(pos, comma - pos), key));
        pos = comma + 1;
        if (comma == line.size()) break;
    }
    return out;
}

}  // namespace detail

inline std::string serialize_model(const FewShotModel& model) {
    std::ostringstream out;
    const auto& z = model.support();
    out << "format = kfs-model/1\n";
    out << "kernel = " << format_kernel(model.kernel()) << "\n";
    out << "label = " << model.new_label() << "\n";
    out << "k = " << z.size() << "\n";
    out << "n = " << z.dim() << "\n";
    out << "r_y = " << detail::full_precision(model.r_y()) << "\n";
    out << "delta = " << detail::full_precision(model.delta()) << "\n";
    out << "separation = " << detail::full_precision(model.separation()) << "\n";
    out << "theta = " << detail::full_precision(model.theta()) << "\n";
    out << "mean_norm = " << detail::full_precision(model.mean_norm()) << "\n";
    for (std::size_t i = 0; i < z.size(); ++i) {
        out << "point." << i << " = ";
        const auto p = z.point(i);
        for (std::size_t j = 0; j < p.size(); ++j) {
            if (j) out << ",";
            out << detail::full_precision(p[j]);
        }
        out << "\n";
    }
    return out.str();
}

inline FewShotModel parse_model(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) throw std::runtime_error("model file: bad line '" + line + "'");
        kv[line.substr(0, eq)] = line.substr(eq + 3);
    }
    auto need = [&](const std::string& key) -> const std::string& {
        const auto it = kv.find(key);
        if (it == kv.end()) throw std::runtime_error("model file: missing key '" + key + "'");
        return it->second;
    };
    if (need("format") != "kfs-model/1") {
        throw std::runtime_error("model file: unsupported format '" + kv["format"] + "'");
    }
    const Kernel kernel = parse_kernel(need("kernel"));
    const Label label = need("label");
    const std::size_t k = static_cast<std::size_t>(std::stoull(need("k")));
    const std::size_t n = static_cast<std::size_t>(std::stoull(need("n")));
    std::vector<std::vector<double>> points;
    points.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        const std::string key = "point." + std::to_string(i);
        auto p = detail::parse_vector_line(need(key), key);
        if (p.size() != n) throw std::runtime_error("model file: " + key + " has wrong dimension");
        points.push_back(std::move(p));
    }
    FewShotModel model(SupportSample(kernel, std::move(points), label),
                       detail::parse_double(need("r_y"), "r_y"),
                       detail::parse_double(need("delta"), "delta"),
                       detail::parse_double(need("theta"), "theta"));
    // The constructor recomputed D and Delta from the points; the stored
    // copies must agree exactly or the file was edited inconsistently.
    if (detail::parse_double(need("mean_norm"), "mean_norm") != model.mean_norm()) {
        throw std::runtime_error("model file: mean_norm does not match the support points");
    }
    if (detail::parse_double(need("separation"), "separation") != model.separation()) {
        throw std::runtime_error("model file: separation does not match delta and the points");
    }
    return model;
}

inline void save_model(const FewShotModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << serialize_model(model);
    if (!out) throw std::runtime_error("failed writing model to '" + path + "'");
}

inline FewShotModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open model file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_model(buf.str());
}

}  // namespace kfs
