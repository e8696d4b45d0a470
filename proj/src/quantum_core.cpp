// Copyright 2026 The qtele Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qtele/quantum_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qtele {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr cplx kI{0.0, 1.0};
}  // namespace

PureQubit::PureQubit(cplx a_h, cplx a_v) {
  double n = std::sqrt(std::norm(a_h) + std::norm(a_v));
  if (n == 0.0 || !std::isfinite(n)) throw DomainError("PureQubit: zero or non-finite amplitudes");
  h = a_h / n;
  v = a_v / n;
}

PureQubit PureQubit::H() { return {1.0, 0.0}; }
PureQubit PureQubit::V() { return {0.0, 1.0}; }
PureQubit PureQubit::plus() { return {kInvSqrt2, kInvSqrt2}; }
PureQubit PureQubit::minus() { return {kInvSqrt2, -kInvSqrt2}; }
PureQubit PureQubit::R() { return {kInvSqrt2, kI * kInvSqrt2}; }
PureQubit PureQubit::L() { return {kInvSqrt2, -kI * kInvSqrt2}; }

PureQubit PureQubit::from_name(const std::string& name) {
  if (name == "H") return H();
  if (name == "V") return V();
  if (name == "+" || name == "plus" || name == "D") return plus();
  if (name == "-" || name == "minus" || name == "A") return minus();
  if (name == "R") return R();
  if (name == "L") return L();
  throw DomainError("unknown polarization state '" + name + "'");
}

PureQubit PureQubit::orthogonal() const { return {-std::conj(v), std::conj(h)}; }

bool PureQubit::same_ray(const PureQubit& other, double tol) const {
  return std::abs(1.0 - std::abs(inner(*this, other))) <= tol;
}

cplx inner(const PureQubit& a, const PureQubit& b) {
  return std::conj(a.h) * b.h + std::conj(a.v) * b.v;
}

double BlochVector::norm() const { return std::sqrt(x * x + y * y + z * z); }

Mat2 Mat2::identity() {
  Mat2 r;
  r.m[0][0] = 1.0;
  r.m[1][1] = 1.0;
  return r;
}

Mat2 Mat2::operator*(const Mat2& o) const {
  Mat2 r;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) r.m[i][j] = m[i][0] * o.m[0][j] + m[i][1] * o.m[1][j];
  return r;
}

Mat2 Mat2::operator+(const Mat2& o) const {
  Mat2 r;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) r.m[i][j] = m[i][j] + o.m[i][j];
  return r;
}

Mat2 Mat2::operator*(double s) const {
  Mat2 r;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) r.m[i][j] = m[i][j] * s;
  return r;
}

Mat2 Mat2::adjoint() const {
  Mat2 r;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) r.m[i][j] = std::conj(m[j][i]);
  return r;
}

cplx Mat2::trace() const { return m[0][0] + m[1][1]; }

std::array<cplx, 2> Mat2::apply_raw(cplx a_h, cplx a_v) const {
  return {m[0][0] * a_h + m[0][1] * a_v, m[1][0] * a_h + m[1][1] * a_v};
}

PureQubit Mat2::apply(const PureQubit& psi) const {
  auto r = apply_raw(psi.h, psi.v);
  return {r[0], r[1]};
}

DensityMatrix::DensityMatrix() {
  m_.m[0][0] = 0.5;
  m_.m[1][1] = 0.5;
}

DensityMatrix::DensityMatrix(const Mat2& m) : m_(m) {
  const double tol = 1e-9;
  if (std::abs(m.trace() - 1.0) > tol) throw DomainError("density matrix: trace != 1");
  if (std::abs(m.m[0][1] - std::conj(m.m[1][0])) > tol || std::abs(m.m[0][0].imag()) > tol ||
      std::abs(m.m[1][1].imag()) > tol)
    throw DomainError("density matrix: not Hermitian");
  double a = m.m[0][0].real(), d = m.m[1][1].real();
  double det = a * d - std::norm(m.m[0][1]);
  if (a < -tol || d < -tol || det < -tol) throw DomainError("density matrix: negative eigenvalue");
}

DensityMatrix DensityMatrix::pure(const PureQubit& psi) {
  Mat2 m;
  m.m[0][0] = std::norm(psi.h);
  m.m[1][1] = std::norm(psi.v);
  m.m[0][1] = psi.h * std::conj(psi.v);
  m.m[1][0] = psi.v * std::conj(psi.h);
  return DensityMatrix(m);
}

DensityMatrix density_from_bloch(const BlochVector& r) {
  if (r.norm() > 1.0 + 1e-9) throw DomainError("invalid Bloch vector: |r| > 1");
  Mat2 m;
  m.m[0][0] = 0.5 * (1.0 + r.z);
  m.m[1][1] = 0.5 * (1.0 - r.z);
  m.m[0][1] = 0.5 * cplx(r.x, -r.y);
  m.m[1][0] = 0.5 * cplx(r.x, r.y);
  return DensityMatrix(m);
}

BlochVector bloch_from_density(const DensityMatrix& rho) {
  const auto& m = rho.matrix().m;
  return {2.0 * m[1][0].real(), 2.0 * m[1][0].imag(), (m[0][0] - m[1][1]).real()};
}

double fidelity(const DensityMatrix& rho, const PureQubit& psi) {
  auto r = rho.matrix().apply_raw(psi.h, psi.v);
  double f = (std::conj(psi.h) * r[0] + std::conj(psi.v) * r[1]).real();
  return std::clamp(f, 0.0, 1.0);
}

double purity(const DensityMatrix& rho) {
  const auto& m = rho.matrix().m;
  double p = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) p += std::norm(m[i][j]);
  return std::clamp(p, 0.5, 1.0);
}

double f_max_from_purity(double P) {
  if (!(P >= 0.5 - 1e-12 && P <= 1.0 + 1e-12)) throw DomainError("purity outside [0.5, 1]");
  double arg = std::max(0.0, 2.0 * P - 1.0);
  return 0.5 * (1.0 + std::sqrt(arg));
}

double purity_from_fidelity_model(double F) {
  if (!(F >= 0.0 && F <= 1.0)) throw DomainError("fidelity outside [0, 1]");
  return 2.0 * F * F - 2.0 * F + 1.0;
}

CountFidelity fidelity_from_counts(double n_target, double n_orth) {
  if (n_target < 0 || n_orth < 0) throw DomainError("negative counts");
  double tot = n_target + n_orth;
  if (tot <= 0) throw DomainError("insufficient statistics: both counts are zero");
  double V = (n_target - n_orth) / tot;
  return {n_target / tot, V};
}

double average_fidelity(const std::vector<double>& f_equator, double f_pole) {
  if (f_equator.empty()) throw DomainError("average_fidelity: empty equator list");
  double fe = std::accumulate(f_equator.begin(), f_equator.end(), 0.0) / f_equator.size();
  return 2.0 / 3.0 * fe + 1.0 / 3.0 * f_pole;
}

Unitary2 waveplate_unitary(PlateKind kind, double angle) {
  double c = std::cos(angle), s = std::sin(angle);
  Mat2 u;
  if (kind == PlateKind::HWP) {
    double c2 = std::cos(2 * angle), s2 = std::sin(2 * angle);
    u.m[0][0] = c2;
    u.m[0][1] = s2;
    u.m[1][0] = s2;
    u.m[1][1] = -c2;
  } else {
    u.m[0][0] = c * c + kI * s * s;
    u.m[0][1] = (1.0 - kI) * s * c;
    u.m[1][0] = (1.0 - kI) * s * c;
    u.m[1][1] = s * s + kI * c * c;
  }
  return u;
}

DensityMatrix depolarize(const PureQubit& psi, double V) {
  if (!(V >= 0.0 && V <= 1.0)) throw DomainError("depolarize: V outside [0, 1]");
  Mat2 m = DensityMatrix::pure(psi).matrix() * V + Mat2::identity() * (0.5 * (1.0 - V));
  return DensityMatrix(m);
}

DensityMatrix rotate(const DensityMatrix& rho, const Unitary2& u) {
  Mat2 m = u * rho.matrix() * u.adjoint();
  // restore exact hermiticity lost to rounding
  m.m[0][0] = m.m[0][0].real();
  m.m[1][1] = m.m[1][1].real();
  m.m[1][0] = std::conj(m.m[0][1]);
  return DensityMatrix(m);
}

bool is_unitary(const Mat2& u, double tol) {
  Mat2 p = u * u.adjoint();
  return std::abs(p.m[0][0] - 1.0) < tol && std::abs(p.m[1][1] - 1.0) < tol &&
         std::abs(p.m[0][1]) < tol && std::abs(p.m[1][0]) < tol;
}

}  // namespace qtele
