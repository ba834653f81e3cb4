#include "maxrank/linalg.hpp"

#include <cmath>
#include <utility>

namespace maxrank {

double det(const Mat& m)
{
    const int d = static_cast<int>(m.rows());
    switch (d) {
    case 0: return 1.0;
    case 1: return m(0, 0);
    case 2: return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    case 3:
        return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1))
             - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
             + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
    default: break;
    }
    Mat a = m;
    double result = 1.0;
    for (int c = 0; c < d; ++c) {
        int pivot = c;
        for (int r = c + 1; r < d; ++r)
            if (std::abs(a(r, c)) > std::abs(a(pivot, c))) pivot = r;
        if (a(pivot, c) == 0.0) return 0.0;
        if (pivot != c) {
            a.row(pivot).swap(a.row(c));
            result = -result;
        }
        result *= a(c, c);
        for (int r = c + 1; r < d; ++r) {
            const double f = a(r, c) / a(c, c);
            for (int k = c; k < d; ++k) a(r, k) -= f * a(c, k);
        }
    }
    return result;
}

double minor_det(const Mat& m, int row_a, int col_a, int row_b, int col_b)
{
    const int d = static_cast<int>(m.rows());
    const int removed = row_b < 0 ? 1 : 2;
    Mat sub(d - removed, d - removed);
    int rr = 0;
    for (int r = 0; r < d; ++r) {
        if (r == row_a || r == row_b) continue;
        int cc = 0;
        for (int c = 0; c < d; ++c) {
            if (c == col_a || c == col_b) continue;
            sub(rr, cc++) = m(r, c);
        }
        ++rr;
    }
    return det(sub);
}

} // namespace maxrank
