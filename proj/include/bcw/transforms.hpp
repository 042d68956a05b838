#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "bcw/domain.hpp"

namespace bcw {

namespace detail {

/// Contract `axis` of a row-major tensor with a matrix M (rows_out x n_axis):
/// out[.., r, ..] = sum_j M[r, j] * in[.., j, ..]. Shapes of the untouched
/// axes are preserved. Plain serial loops; evaluation order is fixed so that
/// results are bit-reproducible run to run.
inline void contract_axis(const std::vector<double>& in, const std::size_t shape[3],
                          int dims, int axis, const std::vector<double>& M,
                          std::size_t rows_out, std::vector<double>& out,
                          std::size_t out_shape[3]) {
  std::size_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= shape[i];
  for (int i = axis + 1; i < dims; ++i) inner *= shape[i];
  const std::size_t n = shape[axis];
  out.assign(outer * rows_out * inner, 0.0);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t r = 0; r < rows_out; ++r) {
      double* dst = out.data() + (o * rows_out + r) * inner;
      const double* Mrow = M.data() + r * n;
      for (std::size_t j = 0; j < n; ++j) {
        const double m = Mrow[j];
        const double* src = in.data() + (o * n + j) * inner;
        for (std::size_t i = 0; i < inner; ++i) dst[i] += m * src[i];
      }
    }
  for (int i = 0; i < dims; ++i) out_shape[i] = shape[i];
  out_shape[axis] = rows_out;
}

}  // namespace detail

/// Transform kernels for one box. Precomputes, per axis,
///  - the N x N sine collocation matrix (DST-I, symmetric),
///  - synthesis onto a padded closed grid of P points including both walls,
///  - the combined "cosine-analyse then project to sines" matrix used by the
///    dealiased product.
///
/// The quadratic product is computed exactly: a product of two sine
/// expansions is, per axis, a cosine polynomial of degree <= 2N. Sampling it
/// on the closed uniform grid with P = 2N+1 points makes the DCT-I analysis
/// exact, and the cosine-to-sine L2 projection has the closed form
///   <cos(m pi x/L), sin(k pi x/L)>-coefficient  B[k][m] = (4k/pi)/(k^2-m^2)
/// for k+m odd and 0 otherwise (independent of L). With padding disabled the
/// same pipeline runs on P = N+1 points, where cosine degrees m and 2N-m
/// alias; that is the classical collocation product.
class SpectralOps {
 public:
  explicit SpectralOps(const BoxDomain& d, bool dealias = true)
      : domain_(d), dealias_(dealias), modes_(enumerate_modes(d)) {
    perm_.resize(modes_.size());
    for (std::size_t s = 0; s < modes_.size(); ++s) perm_[s] = modes_[s].flat;
    for (int ax = 0; ax < d.dims; ++ax) build_axis(ax);
  }

  const BoxDomain& domain() const { return domain_; }
  const std::vector<Mode>& modes() const { return modes_; }
  double mu_min() const { return modes_.front().mu; }

  PhysicalField to_physical(const SpectralField& f) const {
    check_same_domain(f.domain, domain_, "to_physical");
    check_size(f.coeff.size());
    std::vector<double> t = gather(f.coeff);
    std::size_t shape[3], next[3];
    init_shape(shape);
    std::vector<double> tmp;
    for (int ax = 0; ax < domain_.dims; ++ax) {
      const std::size_t n = static_cast<std::size_t>(domain_.modes_per_dim[ax]);
      detail::contract_axis(t, shape, domain_.dims, ax, sine_[ax], n, tmp, next);
      t.swap(tmp);
      for (int i = 0; i < 3; ++i) shape[i] = next[i];
    }
    PhysicalField p(domain_);
    p.values = std::move(t);
    return p;
  }

  SpectralField to_spectral(const PhysicalField& p) const {
    check_same_domain(p.domain, domain_, "to_spectral");
    check_size(p.values.size());
    std::vector<double> t = p.values;
    std::size_t shape[3], next[3];
    init_shape(shape);
    std::vector<double> tmp;
    for (int ax = 0; ax < domain_.dims; ++ax) {
      const std::size_t n = static_cast<std::size_t>(domain_.modes_per_dim[ax]);
      detail::contract_axis(t, shape, domain_.dims, ax, analysis_[ax], n, tmp, next);
      t.swap(tmp);
      for (int i = 0; i < 3; ++i) shape[i] = next[i];
    }
    SpectralField f(domain_);
    f.coeff = scatter(t);
    return f;
  }

  /// L2 projection of the pointwise product u*v back onto the retained sine
  /// modes. Exact (up to roundoff) when constructed with dealias = true.
  SpectralField multiply(const SpectralField& u, const SpectralField& v) const {
    check_same_domain(u.domain, domain_, "multiply_fields");
    check_same_domain(v.domain, domain_, "multiply_fields");
    check_size(u.coeff.size());
    check_size(v.coeff.size());
    std::vector<double> ut = padded_values(u);
    const std::vector<double> vt = padded_values(v);
    for (std::size_t i = 0; i < ut.size(); ++i) ut[i] *= vt[i];
    // analyse the product and project back, axis by axis
    std::size_t shape[3], next[3];
    for (int i = 0; i < domain_.dims; ++i) shape[i] = pad_[i];
    std::vector<double> tmp;
    for (int ax = 0; ax < domain_.dims; ++ax) {
      const std::size_t n = static_cast<std::size_t>(domain_.modes_per_dim[ax]);
      detail::contract_axis(ut, shape, domain_.dims, ax, project_[ax], n, tmp, next);
      ut.swap(tmp);
      for (int i = 0; i < 3; ++i) shape[i] = next[i];
    }
    SpectralField f(domain_);
    f.coeff = scatter(ut);
    return f;
  }

  /// Coefficient-wise realisation of the power A^theta (A = Dirichlet
  /// Laplacian with the sign convention making it positive).
  SpectralField apply_A_power(const SpectralField& f, double theta) const {
    check_same_domain(f.domain, domain_, "apply_A_power");
    check_size(f.coeff.size());
    SpectralField g(domain_);
    if (theta == 0.0) {
      g.coeff = f.coeff;
      return g;
    }
    for (std::size_t s = 0; s < modes_.size(); ++s)
      g.coeff[s] = std::pow(modes_[s].mu, theta) * f.coeff[s];
    return g;
  }

  /// || A^{s/2} f ||_{L2} via Parseval: sqrt( sum_k mu_k^s f_k^2 * prod(L_i/2) ).
  double sobolev_norm(const SpectralField& f, double s) const {
    check_same_domain(f.domain, domain_, "sobolev_norm");
    check_size(f.coeff.size());
    double acc = 0.0;
    if (s == 0.0) {
      for (std::size_t i = 0; i < f.coeff.size(); ++i) acc += f.coeff[i] * f.coeff[i];
    } else {
      for (std::size_t i = 0; i < modes_.size(); ++i)
        acc += std::pow(modes_[i].mu, s) * f.coeff[i] * f.coeff[i];
    }
    return std::sqrt(acc * domain_.volume_factor());
  }

  /// Squared weighted norm on a raw coefficient array in enumeration order
  /// (hot path used by the energy functionals; no field wrapper).
  double norm_sq(const std::vector<double>& coeff, double s) const {
    check_size(coeff.size());
    double acc = 0.0;
    if (s == 0.0) {
      for (std::size_t i = 0; i < coeff.size(); ++i) acc += coeff[i] * coeff[i];
    } else {
      for (std::size_t i = 0; i < modes_.size(); ++i)
        acc += std::pow(modes_[i].mu, s) * coeff[i] * coeff[i];
    }
    return acc * domain_.volume_factor();
  }

 private:
  void init_shape(std::size_t shape[3]) const {
    for (int i = 0; i < domain_.dims; ++i)
      shape[i] = static_cast<std::size_t>(domain_.modes_per_dim[i]);
  }

  void check_size(std::size_t n) const {
    if (n != domain_.mode_count())
      throw ShapeError("SpectralOps: field size does not match the domain");
  }

  std::vector<double> gather(const std::vector<double>& enumer) const {
    std::vector<double> t(enumer.size());
    for (std::size_t s = 0; s < enumer.size(); ++s) t[perm_[s]] = enumer[s];
    return t;
  }

  std::vector<double> scatter(const std::vector<double>& tensor) const {
    std::vector<double> e(tensor.size());
    for (std::size_t s = 0; s < e.size(); ++s) e[s] = tensor[perm_[s]];
    return e;
  }

  std::vector<double> padded_values(const SpectralField& f) const {
    std::vector<double> t = gather(f.coeff);
    std::size_t shape[3], next[3];
    init_shape(shape);
    std::vector<double> tmp;
    for (int ax = 0; ax < domain_.dims; ++ax) {
      detail::contract_axis(t, shape, domain_.dims, ax, padded_sine_[ax], pad_[ax], tmp,
                            next);
      t.swap(tmp);
      for (int i = 0; i < 3; ++i) shape[i] = next[i];
    }
    return t;
  }

  void build_axis(int ax) {
    const int N = domain_.modes_per_dim[ax];
    // interior collocation: x_j = j L/(N+1), j = 1..N
    std::vector<double>& S = sine_[ax];
    S.assign(static_cast<std::size_t>(N) * N, 0.0);
    for (int j = 0; j < N; ++j)
      for (int k = 0; k < N; ++k)
        S[static_cast<std::size_t>(j) * N + k] =
            std::sin(pi * (k + 1) * (j + 1) / (N + 1));
    std::vector<double>& A = analysis_[ax];
    A.assign(S.begin(), S.end());
    const double w = 2.0 / (N + 1);
    for (double& a : A) a *= w;

    // closed product grid: y_q = q L/R, q = 0..R with R = 2N (dealiased)
    // or R = N (aliased collocation product)
    const int R = dealias_ ? 2 * N : N;
    const int P = R + 1;
    pad_[ax] = static_cast<std::size_t>(P);
    std::vector<double>& E = padded_sine_[ax];
    E.assign(static_cast<std::size_t>(P) * N, 0.0);
    for (int q = 0; q < P; ++q)
      for (int k = 0; k < N; ++k)
        E[static_cast<std::size_t>(q) * N + k] = std::sin(pi * (k + 1) * q / R);

    // project_[ax][k][q] = sum_m B[k][m] * D[m][q]  with D the DCT-I
    // analysis on the closed grid (trapezoid endpoint weights); the m-sum
    // telescopes into an N x P matrix applied directly to point values.
    std::vector<double>& G = project_[ax];
    G.assign(static_cast<std::size_t>(N) * P, 0.0);
    for (int k = 1; k <= N; ++k)
      for (int q = 0; q < P; ++q) {
        double acc = 0.0;
        for (int m = 0; m <= R; ++m) {
          if (((k + m) & 1) == 0) continue;  // even k+m projects to zero
          const double B = (4.0 * k / pi) / (static_cast<double>(k) * k -
                                             static_cast<double>(m) * m);
          const double hm = (m == 0 || m == R) ? R : R / 2.0;
          const double wq = (q == 0 || q == R) ? 0.5 : 1.0;
          acc += B * (wq / hm) * std::cos(pi * m * q / static_cast<double>(R));
        }
        G[(static_cast<std::size_t>(k) - 1) * P + q] = acc;
      }
  }

  BoxDomain domain_;
  bool dealias_;
  std::vector<Mode> modes_;
  std::vector<std::size_t> perm_;            // enumeration slot -> tensor flat index
  std::vector<double> sine_[3];              // N x N synthesis (== DST-I kernel)
  std::vector<double> analysis_[3];          // N x N, scaled transpose of sine_
  std::vector<double> padded_sine_[3];       // P x N synthesis on the closed grid
  std::vector<double> project_[3];           // N x P product analysis+projection
  std::size_t pad_[3] = {0, 0, 0};
};

// ---- free-function forms (convenience; construct kernels per call) ----

inline PhysicalField to_physical(const SpectralField& f) {
  return SpectralOps(f.domain).to_physical(f);
}

inline SpectralField to_spectral(const PhysicalField& p) {
  return SpectralOps(p.domain).to_spectral(p);
}

inline SpectralField multiply_fields(const SpectralField& u, const SpectralField& v,
                                     bool dealias = true) {
  check_same_domain(u.domain, v.domain, "multiply_fields");
  return SpectralOps(u.domain, dealias).multiply(u, v);
}

inline SpectralField apply_A_power(const SpectralField& f, double theta) {
  return SpectralOps(f.domain).apply_A_power(f, theta);
}

inline double sobolev_norm(const SpectralField& f, double s) {
  return SpectralOps(f.domain).sobolev_norm(f, s);
}

}  // namespace bcw
