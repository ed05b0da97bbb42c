#include "fbas/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace fbas {

double Rng::normal() {
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform01() - 1.0;
        v = 2.0 * uniform01() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    cached_normal_ = v * f;
    has_cached_normal_ = true;
    return u * f;
}

Eigen::VectorXd Rng::normal_vector(int d) {
    Eigen::VectorXd z(d);
    for (int i = 0; i < d; ++i) z[i] = normal();
    return z;
}

Eigen::VectorXd Rng::uniform_vector(int d, double lo, double hi) {
    Eigen::VectorXd x(d);
    for (int i = 0; i < d; ++i) x[i] = uniform(lo, hi);
    return x;
}

// Wichura (1988), algorithm AS 241, PPND16.
double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("inverse_normal_cdf: p outside (0,1)");
    const double q = p - 0.5;
    double r;
    if (std::fabs(q) <= 0.425) {
        r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                     6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
                   1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
                 1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
               (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                     3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
                   5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
                 4.2313330701600911252e+1) * r + 1.0);
    }
    r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double value;
    if (r <= 5.0) {
        r -= 1.6;
        value = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                      2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
                    3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
                  4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
                (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                      1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                    6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
                  2.05319162663775882187e+0) * r + 1.0);
    } else {
        r -= 5.0;
        value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                      1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                    2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
                  5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
                (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                      1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                    1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                  5.99832206555887937690e-1) * r + 1.0);
    }
    return q < 0.0 ? -value : value;
}

namespace {

// Classic 6-dimension Sobol initialisation (Bratley & Fox): primitive
// polynomial coefficient bits and the seeded direction-number values m_k.
struct SobolInit {
    int degree;
    std::uint32_t poly;  // interior coefficient bits, highest first
    std::array<std::uint32_t, 4> m;
};

constexpr SobolInit kSobolInit[6] = {
    {1, 0, {1, 0, 0, 0}},  {2, 1, {1, 1, 0, 0}},  {3, 1, {1, 3, 7, 0}},
    {3, 2, {1, 3, 3, 0}},  {4, 1, {1, 1, 3, 13}}, {4, 4, {1, 1, 5, 9}},
};

constexpr int kPrimes[16] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

}  // namespace

double radical_inverse(std::uint64_t index, int base) {
    double inv = 1.0 / base, f = inv, value = 0.0;
    while (index > 0) {
        value += static_cast<double>(index % base) * f;
        index /= base;
        f *= inv;
    }
    return value;
}

SobolSequence::SobolSequence(int dim, Rng& rng) : dim_(dim) {
    const int ns = dim < 6 ? dim : 6;
    direction_.resize(ns);
    x_.assign(ns, 0u);
    shift_.resize(ns);
    for (int d = 0; d < ns; ++d) {
        const auto& init = kSobolInit[d];
        auto& v = direction_[d];
        for (int k = 0; k < init.degree; ++k)
            v[k] = init.m[k] << (31 - k);
        for (int k = init.degree; k < 32; ++k) {
            std::uint32_t value = v[k - init.degree] ^ (v[k - init.degree] >> init.degree);
            for (int j = 1; j < init.degree; ++j)
                if ((init.poly >> (init.degree - 1 - j)) & 1u) value ^= v[k - j];
            v[k] = value;
        }
        shift_[d] = static_cast<std::uint32_t>(rng.next() >> 32);
    }
    for (int d = ns; d < dim; ++d) halton_base_.push_back(kPrimes[(d - ns) % 16]);
    halton_index_ = 1 + rng.uniform_int(1u << 16);
}

Eigen::VectorXd SobolSequence::next() {
    // Emit the point at the current index, then advance the gray-code state.
    // Index 0 is included: the digital shift turns it into an ordinary point,
    // and whole dyadic blocks [0, 2^m) keep the net property.
    Eigen::VectorXd p(dim_);
    for (size_t d = 0; d < direction_.size(); ++d) {
        const std::uint32_t bits = x_[d] ^ shift_[d];
        p[static_cast<int>(d)] = (static_cast<double>(bits) + 0.5) * 0x1.0p-32;
    }
    for (size_t d = 0; d < halton_base_.size(); ++d)
        p[static_cast<int>(direction_.size() + d)] =
            radical_inverse(halton_index_ + index_, halton_base_[d]);
    // flip the direction number of the lowest zero bit of the index
    std::uint64_t c = 0;
    std::uint64_t value = index_;
    while (value & 1u) {
        value >>= 1;
        ++c;
    }
    for (size_t d = 0; d < direction_.size(); ++d) x_[d] ^= direction_[d][c & 31];
    ++index_;
    return p;
}

HaltonSequence::HaltonSequence(int dim, Rng& rng) {
    for (int d = 0; d < dim; ++d) base_.push_back(kPrimes[d % 16]);
    index_ = 1 + rng.uniform_int(1u << 16);
}

Eigen::VectorXd HaltonSequence::next() {
    Eigen::VectorXd p(static_cast<int>(base_.size()));
    for (size_t d = 0; d < base_.size(); ++d)
        p[static_cast<int>(d)] = radical_inverse(index_, base_[d]);
    ++index_;
    return p;
}

}  // namespace fbas
