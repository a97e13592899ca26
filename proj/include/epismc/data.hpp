#pragma once

#include <string>
#include <vector>

#include "epismc/errors.hpp"

namespace epismc {

// One calendar day's surveillance returns. Count streams hold -1 where the
// stream did not report for that (day, age); survey streams pair positives
// with denominators and are absent when the denominator is zero or missing.
struct SurveillanceBatch {
    int day = 0;  // 1-based
    std::vector<long> confirmed;            // scenario 1 counts
    std::vector<long> gp;                   // scenario 2 counts
    std::vector<long> viro_pos, viro_n;     // scenario 2 swab positives / swabs
    std::vector<long> sero_pos, sero_n;     // serology positives / samples

    explicit SurveillanceBatch(int day_ = 0, int n_ages = 0)
        : day(day_),
          confirmed(n_ages, -1),
          gp(n_ages, -1),
          viro_pos(n_ages, 0),
          viro_n(n_ages, 0),
          sero_pos(n_ages, 0),
          sero_n(n_ages, 0) {}

    bool empty() const;
};

struct Dataset {
    int n_ages = 0;
    std::vector<SurveillanceBatch> batches;  // index day-1, contiguous from day 1

    int n_days() const { return static_cast<int>(batches.size()); }
    const SurveillanceBatch& day(int d) const {
        if (d < 1 || d > n_days()) throw data_error("day out of range");
        return batches[static_cast<std::size_t>(d - 1)];
    }
    SurveillanceBatch& day(int d) {
        if (d < 1 || d > n_days()) throw data_error("day out of range");
        return batches[static_cast<std::size_t>(d - 1)];
    }
    static Dataset empty(int n_ages, int n_days);

    // rows: day, age_group, stream, count, denominator (blank for count streams)
    static Dataset read_csv(const std::string& path);
    void write_csv(const std::string& path) const;
};

}  // namespace epismc
