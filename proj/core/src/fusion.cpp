#include "gestformer/fusion.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace gestformer {

int late_fuse(const std::vector<ModalityPosterior>& posteriors) {
    if (posteriors.empty()) throw InputError("late_fuse: no modalities given");
    const std::int64_t n = posteriors.front().probs.numel();
    std::vector<double> sum(static_cast<std::size_t>(n), 0.0);
    for (const auto& p : posteriors) {
        if (p.probs.numel() != n) {
            throw InputError("late_fuse: modality \"" + p.modality + "\" has " +
                             std::to_string(p.probs.numel()) + " classes, expected " +
                             std::to_string(n));
        }
        for (std::int64_t j = 0; j < n; ++j) sum[static_cast<std::size_t>(j)] += p.probs[j];
    }
    int best = 0;
    for (std::int64_t j = 1; j < n; ++j) {
        if (sum[static_cast<std::size_t>(j)] > sum[static_cast<std::size_t>(best)]) {
            best = static_cast<int>(j);
        }
    }
    return best;
}

void save_posteriors(const std::string& path, const std::string& modality,
                     const std::vector<PosteriorRecord>& records) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open for writing: " + path);
    out << "modality=" << modality << "\n";
    char buf[32];
    for (const auto& r : records) {
        out << r.id << "," << r.label;
        for (double p : r.probs) {
            std::snprintf(buf, sizeof buf, "%.17g", p);
            out << "," << buf;
        }
        out << "\n";
    }
    if (!out) throw InputError("write failed: " + path);
}

PosteriorFile load_posteriors(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open: " + path);
    PosteriorFile f;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (lineno == 1) {
            if (line.rfind("modality=", 0) != 0) {
                throw FormatError(path + ":1: expected \"modality=<name>\" header");
            }
            f.modality = line.substr(9);
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() < 3) {
            throw FormatError(path + ":" + std::to_string(lineno) +
                              ": expected id,label,p0,... got \"" + line + "\"");
        }
        PosteriorRecord r;
        r.id = fields[0];
        std::size_t used = 0;
        try {
            r.label = std::stoi(fields[1], &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != fields[1].size()) {
            throw FormatError(path + ":" + std::to_string(lineno) + ": bad label \"" + fields[1] +
                              "\"");
        }
        double sum = 0.0;
        for (std::size_t i = 2; i < fields.size(); ++i) {
            double v = 0.0;
            try {
                v = std::stod(fields[i], &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != fields[i].size()) {
                throw FormatError(path + ":" + std::to_string(lineno) + ": bad probability \"" +
                                  fields[i] + "\"");
            }
            r.probs.push_back(v);
            sum += v;
        }
        if (!f.records.empty() && r.probs.size() != f.records.front().probs.size()) {
            throw FormatError(path + ":" + std::to_string(lineno) + ": row has " +
                              std::to_string(r.probs.size()) + " classes, expected " +
                              std::to_string(f.records.front().probs.size()));
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            throw FormatError(path + ":" + std::to_string(lineno) +
                              ": probabilities sum to " + std::to_string(sum) + ", expected 1");
        }
        f.records.push_back(std::move(r));
    }
    if (f.modality.empty() && f.records.empty()) {
        throw FormatError(path + ": empty posterior file");
    }
    return f;
}

} // namespace gestformer
