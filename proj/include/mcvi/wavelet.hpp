#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace mcvi::wavelet {

inline constexpr std::array<double, 12> kSym6Lo = {
    0.0154041093270448243,   0.00349071208422216252, -0.117990111148520025,
    -0.0483117425856980550,  0.491055941927973733,   0.787641141028650996,
    0.337929421728165833,    -0.0726375227863765835, -0.0210602925123708480,
    0.0447249017707813847,   0.00176771186425400774, -0.00780070832503238041};

inline constexpr std::array<double, 12> make_sym6_hi() {
    std::array<double, 12> g{};
    for (int k = 0; k < 12; ++k)
        g[k] = (k % 2 == 0 ? 1.0 : -1.0) * kSym6Lo[11 - k];
    return g;
}

inline constexpr std::array<double, 12> kSym6Hi = make_sym6_hi();

inline constexpr int kFilterLen = 12;

inline void check_transform_size(std::size_t n, int levels) {
    if (levels < 1) throw std::invalid_argument("wavelet: levels must be >= 1");
    std::size_t m = n;
    for (int l = 0; l < levels; ++l) {
        if (m % 2 != 0 || m < kFilterLen)
            throw std::invalid_argument("wavelet: size does not support requested depth");
        m /= 2;
    }
}

inline void dwt_level(const double* x, std::size_t n, double* a, double* d) {
    std::size_t half = n / 2;
    for (std::size_t k = 0; k < half; ++k) {
        double sa = 0.0, sd = 0.0;
        for (int m = 0; m < kFilterLen; ++m) {
            double v = x[(2 * k + m) % n];
            sa += kSym6Lo[m] * v;
            sd += kSym6Hi[m] * v;
        }
        a[k] = sa;
        d[k] = sd;
    }
}

inline void idwt_level(const double* a, const double* d, std::size_t half, double* x) {
    std::size_t n = 2 * half;
    for (std::size_t i = 0; i < n; ++i) x[i] = 0.0;
    for (std::size_t k = 0; k < half; ++k)
        for (int m = 0; m < kFilterLen; ++m) {
            std::size_t i = (2 * k + m) % n;
            x[i] += kSym6Lo[m] * a[k] + kSym6Hi[m] * d[k];
        }
}

// coefficient layout: [approx_L | detail_L | detail_{L-1} | ... | detail_1]
inline std::vector<double> dwt(const std::vector<double>& x, int levels) {
    check_transform_size(x.size(), levels);
    std::size_t n = x.size();
    std::vector<double> out(n), cur(x), next;
    std::size_t m = n;
    for (int l = 1; l <= levels; ++l) {
        std::size_t half = m / 2;
        next.resize(half);
        std::vector<double> detail(half);
        dwt_level(cur.data(), m, next.data(), detail.data());
        for (std::size_t k = 0; k < half; ++k) out[half + k] = detail[k];
        cur = next;
        m = half;
    }
    for (std::size_t k = 0; k < m; ++k) out[k] = cur[k];
    return out;
}

inline std::vector<double> idwt(const std::vector<double>& c, int levels) {
    check_transform_size(c.size(), levels);
    std::size_t n = c.size();
    std::size_t coarse = n >> levels;
    std::vector<double> cur(c.begin(), c.begin() + coarse), up;
    std::size_t off = coarse;
    for (int l = levels; l >= 1; --l) {
        std::size_t half = cur.size();
        up.resize(2 * half);
        idwt_level(cur.data(), c.data() + off, half, up.data());
        off += half;
        cur = up;
    }
    return cur;
}

struct SparseVec {
    std::vector<int> idx;
    std::vector<double> val;

    std::size_t nnz() const { return idx.size(); }
};

// column c of the synthesis operator: the signal whose transform is e_c
inline SparseVec basis_column(std::size_t n, int levels, std::size_t c) {
    if (c >= n) throw std::invalid_argument("wavelet: basis column out of range");
    std::vector<double> e(n, 0.0);
    e[c] = 1.0;
    std::vector<double> col = idwt(e, levels);
    SparseVec out;
    for (std::size_t i = 0; i < n; ++i)
        if (col[i] != 0.0) {
            out.idx.push_back(static_cast<int>(i));
            out.val.push_back(col[i]);
        }
    return out;
}

}  // namespace mcvi::wavelet
