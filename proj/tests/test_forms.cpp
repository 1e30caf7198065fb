#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "ccramp/forms.hpp"
#include "test_support.hpp"

using namespace ccramp;
using ccramp::testing::Rng;

namespace {

using C = std::complex<double>;
const C I(0.0, 1.0);

Form diag_form(std::initializer_list<double> d) {
  Vector v(static_cast<Eigen::Index>(d.size()));
  Eigen::Index i = 0;
  for (double x : d) v(i++) = x;
  return Form(v.cast<C>().asDiagonal().toDenseMatrix());
}

ComplexMatrix random_psd(Rng& rng, Eigen::Index n, Eigen::Index rank) {
  ComplexMatrix g(n, rank);
  g.real() = rng.matrix(n, rank);
  g.imag() = rng.matrix(n, rank);
  return g * g.adjoint();
}

ComplexMatrix minimal_matrix() { return ccramp::testing::minimal_form(); }

// A via Cholesky whitening and two separately computed square roots.
ComplexMatrix half_sum_sqrt_oracle(const ComplexMatrix& s) {
  const ComplexMatrix r0 = s + s.conjugate();
  Eigen::LLT<ComplexMatrix> llt(r0);
  const ComplexMatrix l = llt.matrixL();
  const ComplexMatrix l_inv = l.inverse();
  auto sqrtm = [](const ComplexMatrix& m) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (m + m.adjoint()));
    return ComplexMatrix(es.eigenvectors() *
                         es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                         es.eigenvectors().adjoint());
  };
  const ComplexMatrix sum = sqrtm(l_inv * s * l_inv.adjoint()) +
                            sqrtm(l_inv * s.conjugate() * l_inv.adjoint());
  return 0.5 * l * sum * sum * l.adjoint();
}

double sup_over_directions(Rng& rng, const Form& q, const Vector& alpha, int count) {
  double best = 0;
  for (int i = 0; i < count; ++i) {
    ComplexVector x(q.dim());
    x.real() = rng.vector(q.dim());
    x.imag() = rng.vector(q.dim());
    const C ax = alpha.cast<C>().transpose() * x;
    best = std::max(best, std::norm(ax) / q(x, x).real());
  }
  return best;
}

}  // namespace

TEST_CASE("PositiveForm validation") {
  ComplexMatrix m(2, 2);
  m << 1, 2, 0, 1;
  CHECK_THROWS_AS(Form{m}, Error);
  m << 1, 2, 2, 1;  // eigenvalue -1
  try {
    Form f(m);
    FAIL("expected NotPSD");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotPSD);
  }
  // Slightly negative within tolerance is accepted.
  m << 1, 0, 0, -1e-12;
  CHECK_NOTHROW(Form{m});
}

TEST_CASE("conjugate_form") {
  const Form real = diag_form({2.0, 3.0});
  CHECK(conjugate_form(real).matrix() == real.matrix());

  const Form f(minimal_matrix());
  ComplexMatrix expected(2, 2);
  expected << 0.5, -0.5 * I, 0.5 * I, 0.5;
  CHECK((conjugate_form(f).matrix() - expected).norm() == 0.0);
  CHECK(conjugate_form(conjugate_form(f)).matrix() == f.matrix());
}

TEST_CASE("kernel_basis") {
  CHECK(kernel_basis(diag_form({1, 1})).empty());

  const auto k1 = kernel_basis(diag_form({0, 1}));
  REQUIRE(k1.size() == 1);
  CHECK(std::abs(std::abs(k1[0](0)) - 1.0) < 1e-14);
  CHECK(std::abs(k1[0](1)) < 1e-14);

  const auto k2 = kernel_basis(diag_form({0, 0}));
  CHECK(k2.size() == 2);
}

TEST_CASE("ratio_operator examples") {
  const Form g = diag_form({1, 2});
  const auto same = ratio_operator(g, g);
  CHECK(same.dominated);
  CHECK((same.matrix - ComplexMatrix::Identity(2, 2)).norm() < 1e-14);

  const auto r = ratio_operator(diag_form({2, 6}), g);
  CHECK(r.dominated);
  ComplexMatrix expected = ComplexMatrix::Zero(2, 2);
  expected(0, 0) = 2;
  expected(1, 1) = 3;
  CHECK((r.matrix - expected).norm() < 1e-14);

  CHECK_FALSE(ratio_operator(diag_form({1, 1}), diag_form({0, 1})).dominated);
}

TEST_CASE("ratio_operator reproduces F and has real nonnegative spectrum") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = rng.integer(1, 5);
    const Form g(random_psd(rng, n, n));
    const Form f(random_psd(rng, n, rng.integer(0, static_cast<int>(n))));
    const auto r = ratio_operator(f, g);
    REQUIRE(r.dominated);
    const double scale = f.matrix().norm() * g.matrix().norm() + 1e-300;
    CHECK((g.matrix() * r.matrix - f.matrix()).norm() / scale < 1e-9);
    Eigen::ComplexEigenSolver<ComplexMatrix> es(r.matrix, false);
    for (Eigen::Index i = 0; i < n; ++i) {
      CHECK(std::abs(es.eigenvalues()(i).imag()) < 1e-8);
      CHECK(es.eigenvalues()(i).real() > -1e-8);
    }
  }
}

TEST_CASE("ratio_operator extends by zero on a degenerate reference") {
  // F = diag(3, 0, 4), G = diag(1, 0, 2): dominated, X = diag(3, 0, 2).
  const auto r = ratio_operator(diag_form({3, 0, 4}), diag_form({1, 0, 2}));
  CHECK(r.dominated);
  CHECK(std::abs(r.matrix(0, 0) - 3.0) < 1e-14);
  CHECK(std::abs(r.matrix(1, 1)) < 1e-14);
  CHECK(std::abs(r.matrix(2, 2) - 2.0) < 1e-14);
}

TEST_CASE("half_sum_sqrt_form examples") {
  const Form real = diag_form({0.7, 2.0});
  CHECK((half_sum_sqrt_form(real).matrix() - 2.0 * real.matrix()).norm() < 1e-14);

  const Form vac(minimal_matrix());
  CHECK((half_sum_sqrt_form(vac).matrix() - 0.5 * ComplexMatrix::Identity(2, 2)).norm() < 1e-14);
}

TEST_CASE("half_sum_sqrt_form matches a separate-roots oracle") {
  Rng rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const ComplexMatrix s = random_psd(rng, 4, 4);
    const Form f(s);
    const ComplexMatrix a = half_sum_sqrt_form(f).matrix();
    if ((s + s.conjugate()).llt().info() != Eigen::Success) continue;
    const ComplexMatrix expected = half_sum_sqrt_oracle(s);
    CHECK((a - expected).norm() / expected.norm() < 1e-10);
    // Conjugation symmetry, and A is real.
    CHECK((half_sum_sqrt_form(conjugate_form(f)).matrix() - a).norm() / a.norm() < 1e-12);
    CHECK(a.imag().norm() / a.norm() < 1e-12);
  }
}

TEST_CASE("half_sum_sqrt_form keeps ker(S + conj S)") {
  // Kernel along e_2.
  ComplexMatrix s = ComplexMatrix::Zero(3, 3);
  s.topLeftCorner(1, 1) << 1.0;
  s.bottomRightCorner(1, 1) << 2.0;
  const Form a = half_sum_sqrt_form(Form(s));
  CHECK(a.matrix().row(1).norm() < 1e-14);
  CHECK(a.matrix().col(1).norm() < 1e-14);
  CHECK(std::abs(a.matrix()(2, 2) - 4.0) < 1e-14);
}

TEST_CASE("det_sqrt_ratio examples") {
  const Form a = diag_form({1.0, 3.0});
  const auto same = det_sqrt_ratio(a, a);
  CHECK(same.value == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(same.log_value) < 1e-15);

  CHECK(det_sqrt_ratio(diag_form({1}), diag_form({4})).value ==
        doctest::Approx(0.8).epsilon(1e-15));

  const auto singular = det_sqrt_ratio(diag_form({1, 0}), diag_form({1, 1}));
  CHECK(singular.value == 0.0);
  CHECK(std::isinf(singular.log_value));
}

TEST_CASE("det_sqrt_ratio is symmetric, scale invariant and in [0,1]") {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = rng.integer(1, 5);
    const Form a(random_psd(rng, n, n));
    const Form b(random_psd(rng, n, n));
    const double d = det_sqrt_ratio(a, b).value;
    CHECK(d >= 0.0);
    CHECK(d <= 1.0);
    CHECK(std::abs(d - det_sqrt_ratio(b, a).value) < 1e-12);
    const double c = rng.uniform(0.1, 10.0);
    CHECK(std::abs(d - det_sqrt_ratio(a.scaled(c), b.scaled(c)).value) < 1e-12);
  }
}

TEST_CASE("det_sqrt_ratio works on the quotient by a common kernel") {
  const auto r = det_sqrt_ratio(diag_form({1, 0}), diag_form({4, 0}));
  CHECK(r.value == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(r.ratios.size() == 1);
}

TEST_CASE("inverse_form examples") {
  Vector e1(2);
  e1 << 1, 0;
  CHECK(inverse_form(diag_form({1, 1}), e1).value == doctest::Approx(1.0));

  Vector one(1);
  one << 1;
  const auto half = inverse_form(diag_form({2}), one);
  CHECK(half.value == doctest::Approx(0.5).epsilon(1e-15));
  REQUIRE(half.finite());
  CHECK(std::abs((*half.witness)(0) - 0.5) < 1e-15);

  const auto inf = inverse_form(diag_form({0, 1}), e1);
  CHECK(std::isinf(inf.value));
  CHECK_FALSE(inf.finite());
}

TEST_CASE("inverse_form satisfies the variational characterization") {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index n = rng.integer(1, 6);
    const Form q(random_psd(rng, n, n));
    const Vector alpha = rng.vector(n);
    const auto inv = inverse_form(q, alpha);
    REQUIRE(inv.finite());
    // No direction beats the value, and the witness attains it.
    CHECK(sup_over_directions(rng, q, alpha, 2000) <= inv.value * (1 + 1e-8));
    const ComplexVector& a = *inv.witness;
    const C aa = alpha.cast<C>().transpose() * a;
    CHECK(std::abs(std::norm(aa) / q(a, a).real() - inv.value) / inv.value < 1e-8);
    // alpha(x) = Q(a, x).
    for (Eigen::Index j = 0; j < n; ++j) {
      CHECK(std::abs(q(a, ComplexVector::Unit(n, j)) - alpha(j)) < 1e-8 * (1 + alpha.norm()));
    }
    const double c = rng.uniform(0.1, 10.0);
    CHECK(std::abs(inverse_form(q.scaled(c), alpha).value - inv.value / c) / inv.value < 1e-10);
  }
}

TEST_CASE("forms are scalar-generic") {
  using LD = long double;
  CMatrix<LD> m = CMatrix<LD>::Zero(1, 1);
  m(0, 0) = 1;
  CMatrix<LD> n = CMatrix<LD>::Zero(1, 1);
  n(0, 0) = 4;
  const auto r = det_sqrt_ratio(PositiveForm<LD>(m), PositiveForm<LD>(n));
  CHECK(std::abs(r.value - 0.8L) < 1e-18L);
}
