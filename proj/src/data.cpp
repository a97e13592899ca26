#include "epismc/data.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace epismc {

bool SurveillanceBatch::empty() const {
    auto any_count = [](const std::vector<long>& v) {
        return std::any_of(v.begin(), v.end(), [](long x) { return x >= 0; });
    };
    auto any_pos = [](const std::vector<long>& v) {
        return std::any_of(v.begin(), v.end(), [](long x) { return x > 0; });
    };
    return !any_count(confirmed) && !any_count(gp) && !any_pos(viro_n) && !any_pos(sero_n);
}

Dataset Dataset::empty(int n_ages, int n_days) {
    Dataset d;
    d.n_ages = n_ages;
    d.batches.reserve(static_cast<std::size_t>(n_days));
    for (int t = 1; t <= n_days; ++t) d.batches.emplace_back(t, n_ages);
    return d;
}

namespace {
std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}
}  // namespace

Dataset Dataset::read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open data file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw data_error("empty data file: " + path);

    struct Row {
        int day, age;
        std::string stream;
        long count, denom;
    };
    std::vector<Row> rows;
    int max_day = 0, max_age = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() < 4)
            throw data_error("bad data row at line " + std::to_string(line_no));
        Row r;
        try {
            r.day = std::stoi(f[0]);
            r.age = std::stoi(f[1]);
            r.stream = f[2];
            r.count = std::stol(f[3]);
            r.denom = (f.size() >= 5 && !f[4].empty()) ? std::stol(f[4]) : -1;
        } catch (const std::exception&) {
            throw data_error("unparseable data row at line " + std::to_string(line_no));
        }
        if (r.day < 1 || r.age < 1 || r.count < 0)
            throw data_error("out-of-range values at line " + std::to_string(line_no));
        max_day = std::max(max_day, r.day);
        max_age = std::max(max_age, r.age);
        rows.push_back(r);
    }

    Dataset d = Dataset::empty(max_age, max_day);
    for (const auto& r : rows) {
        auto& b = d.day(r.day);
        const std::size_t a = static_cast<std::size_t>(r.age - 1);
        if (r.stream == "confirmed") {
            b.confirmed[a] = r.count;
        } else if (r.stream == "gp") {
            b.gp[a] = r.count;
        } else if (r.stream == "virology") {
            if (r.denom < 0) throw data_error("virology row without denominator");
            if (r.count > r.denom) throw data_error("virology positives exceed denominator");
            b.viro_pos[a] = r.count;
            b.viro_n[a] = r.denom;
        } else if (r.stream == "serology") {
            if (r.denom < 0) throw data_error("serology row without denominator");
            if (r.count > r.denom) throw data_error("serology positives exceed denominator");
            b.sero_pos[a] = r.count;
            b.sero_n[a] = r.denom;
        } else {
            throw data_error("unknown stream '" + r.stream + "'");
        }
    }
    return d;
}

void Dataset::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write data file: " + path);
    out << "day,age_group,stream,count,denominator\n";
    for (const auto& b : batches) {
        for (int a = 0; a < n_ages; ++a) {
            const std::size_t ai = static_cast<std::size_t>(a);
            if (b.confirmed[ai] >= 0)
                out << b.day << ',' << (a + 1) << ",confirmed," << b.confirmed[ai] << ",\n";
            if (b.gp[ai] >= 0) out << b.day << ',' << (a + 1) << ",gp," << b.gp[ai] << ",\n";
            if (b.viro_n[ai] > 0)
                out << b.day << ',' << (a + 1) << ",virology," << b.viro_pos[ai] << ','
                    << b.viro_n[ai] << '\n';
            if (b.sero_n[ai] > 0)
                out << b.day << ',' << (a + 1) << ",serology," << b.sero_pos[ai] << ','
                    << b.sero_n[ai] << '\n';
        }
    }
    if (!out) throw data_error("failed writing data file: " + path);
}

}  // namespace epismc
