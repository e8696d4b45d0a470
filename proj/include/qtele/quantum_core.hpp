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

#ifndef QTELE_QUANTUM_CORE_HPP
#define QTELE_QUANTUM_CORE_HPP

#include <array>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace qtele {

using cplx = std::complex<double>;

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Polarization qubit in the {|H>, |V>} basis.
struct PureQubit {
  cplx h{1.0, 0.0};
  cplx v{0.0, 0.0};

  PureQubit() = default;
  PureQubit(cplx a_h, cplx a_v);  // normalizes; throws on the zero vector

  static PureQubit H();
  static PureQubit V();
  static PureQubit plus();
  static PureQubit minus();
  static PureQubit R();
  static PureQubit L();
  // Accepts H, V, +, -, R, L (also "plus"/"minus").
  static PureQubit from_name(const std::string& name);

  PureQubit orthogonal() const;
  // Equality up to global phase.
  bool same_ray(const PureQubit& other, double tol = 1e-12) const;
};

cplx inner(const PureQubit& a, const PureQubit& b);  // <a|b>

struct BlochVector {
  double x = 0, y = 0, z = 0;
  double norm() const;
};

// 2x2 complex matrix, row major: m[row][col].
struct Mat2 {
  std::array<std::array<cplx, 2>, 2> m{};

  static Mat2 identity();
  Mat2 operator*(const Mat2& o) const;
  Mat2 operator+(const Mat2& o) const;
  Mat2 operator*(double s) const;
  Mat2 adjoint() const;
  cplx trace() const;
  PureQubit apply(const PureQubit& psi) const;  // normalizes the result
  std::array<cplx, 2> apply_raw(cplx a_h, cplx a_v) const;
};

class DensityMatrix {
 public:
  DensityMatrix();  // I/2
  explicit DensityMatrix(const Mat2& m);  // validates the invariants
  static DensityMatrix pure(const PureQubit& psi);

  const Mat2& matrix() const { return m_; }
  cplx operator()(int r, int c) const { return m_.m[r][c]; }

 private:
  Mat2 m_;
};

using Unitary2 = Mat2;

enum class PlateKind { HWP, QWP };

DensityMatrix density_from_bloch(const BlochVector& r);
BlochVector bloch_from_density(const DensityMatrix& rho);
double fidelity(const DensityMatrix& rho, const PureQubit& psi);
double purity(const DensityMatrix& rho);
double f_max_from_purity(double P);
double purity_from_fidelity_model(double F);

struct CountFidelity {
  double F;
  double V;
};
CountFidelity fidelity_from_counts(double n_target, double n_orth);

double average_fidelity(const std::vector<double>& f_equator, double f_pole);
Unitary2 waveplate_unitary(PlateKind kind, double angle);
DensityMatrix depolarize(const PureQubit& psi, double V);
DensityMatrix rotate(const DensityMatrix& rho, const Unitary2& u);  // U rho U^dag
bool is_unitary(const Mat2& u, double tol = 1e-12);

}  // namespace qtele

#endif  // QTELE_QUANTUM_CORE_HPP
