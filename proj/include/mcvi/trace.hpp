#pragma once

#include <cstdio>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcvi {

// Per-sweep record of monitored statistics. Wall-clock stamps are kept in
// memory for budget accounting but never serialized, so equal seeds give
// byte-identical CSV output.
struct SweepTrace {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<double> elapsed_secs;

    void append(std::vector<double> row, double secs = 0.0) {
        if (row.size() != columns.size())
            throw std::invalid_argument("SweepTrace: row width mismatch");
        rows.push_back(std::move(row));
        elapsed_secs.push_back(secs);
    }

    std::size_t size() const { return rows.size(); }

    std::string to_csv() const {
        std::string out = "sweep";
        for (const auto& c : columns) {
            out += ',';
            out += c;
        }
        out += '\n';
        char buf[40];
        for (std::size_t i = 0; i < rows.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%zu", i + 1);
            out += buf;
            for (double v : rows[i]) {
                std::snprintf(buf, sizeof buf, ",%.17g", v);
                out += buf;
            }
            out += '\n';
        }
        return out;
    }

    static SweepTrace from_csv(std::istream& in) {
        SweepTrace t;
        std::string line;
        if (!std::getline(in, line)) throw std::runtime_error("trace csv: empty input");
        std::stringstream hs(line);
        std::string tok;
        bool first = true;
        while (std::getline(hs, tok, ',')) {
            if (first) {
                if (tok != "sweep") throw std::runtime_error("trace csv: bad header");
                first = false;
            } else {
                t.columns.push_back(tok);
            }
        }
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::stringstream ls(line);
            std::vector<double> row;
            bool lead = true;
            while (std::getline(ls, tok, ',')) {
                if (lead) {
                    lead = false;
                    continue;
                }
                row.push_back(std::stod(tok));
            }
            t.append(std::move(row));
        }
        return t;
    }
};

struct TraceSummary {
    std::vector<std::string> columns;
    std::vector<double> mean, sd;
    std::size_t used_rows = 0;
};

// mean / sample-sd per column over rows [burn_in, end)
inline TraceSummary summarize_trace(const SweepTrace& t, std::size_t burn_in) {
    TraceSummary s;
    s.columns = t.columns;
    std::size_t n = t.rows.size();
    if (burn_in >= n) {
        s.mean.assign(t.columns.size(), 0.0);
        s.sd.assign(t.columns.size(), 0.0);
        return s;
    }
    std::size_t m = n - burn_in;
    s.used_rows = m;
    s.mean.assign(t.columns.size(), 0.0);
    s.sd.assign(t.columns.size(), 0.0);
    for (std::size_t i = burn_in; i < n; ++i)
        for (std::size_t c = 0; c < t.columns.size(); ++c) s.mean[c] += t.rows[i][c];
    for (auto& v : s.mean) v /= double(m);
    if (m > 1) {
        for (std::size_t i = burn_in; i < n; ++i)
            for (std::size_t c = 0; c < t.columns.size(); ++c) {
                double d = t.rows[i][c] - s.mean[c];
                s.sd[c] += d * d;
            }
        for (auto& v : s.sd) v = std::sqrt(v / double(m - 1));
    }
    return s;
}

}  // namespace mcvi
