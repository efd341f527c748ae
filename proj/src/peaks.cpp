#include "maser/peaks.hpp"

#include <algorithm>
#include <cmath>

namespace maser {

std::vector<PeakIndex> find_peaks(const std::vector<double>& y, double min_height,
                                  double min_prominence) {
    std::vector<PeakIndex> out;
    const std::size_t n = y.size();
    if (n < 3) return out;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(y[i] > y[i - 1])) continue;
        // walk across a plateau
        std::size_t j = i;
        while (j + 1 < n && y[j + 1] == y[i]) ++j;
        if (j + 1 >= n || !(y[j + 1] < y[i])) {
            i = j;
            continue;
        }
        const double h = y[i];
        if (h >= min_height) {
            double left_min = h;
            for (std::size_t k = i; k-- > 0;) {
                if (y[k] > h) break;
                left_min = std::min(left_min, y[k]);
            }
            double right_min = h;
            for (std::size_t k = j + 1; k < n; ++k) {
                if (y[k] > h) break;
                right_min = std::min(right_min, y[k]);
            }
            const double prom = h - std::max(left_min, right_min);
            if (prom >= min_prominence) {
                PeakIndex p{i, h, prom, 0.0};
                if (j == i) {
                    const double denom = y[i - 1] - 2.0 * y[i] + y[i + 1];
                    if (denom < 0.0) {
                        p.offset = std::clamp(0.5 * (y[i - 1] - y[i + 1]) / denom, -0.5, 0.5);
                    }
                } else {
                    p.offset = 0.5 * static_cast<double>(j - i);  // plateau centre
                }
                out.push_back(p);
            }
        }
        i = j;
    }
    return out;
}

}  // namespace maser
