#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "dibi/gauss.hpp"
#include "dibi/kernels.hpp"
#include "support/builders.hpp"

using namespace dibi;
using namespace dibitest;

namespace {

Category<Gauss> gcat1() {
  Gauss::Theta theta;
  theta.fallback = 1;
  return Category<Gauss>(theta);
}

Morphism<Gauss> gmor(const Category<Gauss>& cat, const VarList& dom, const VarList& cod,
                     Eigen::MatrixXd M, Eigen::MatrixXd cov, Eigen::VectorXd mean) {
  return {dom, cod,
          Gauss::make(cat.object_of(dom), cat.object_of(cod), std::move(M), std::move(cov),
                      std::move(mean))};
}

// Random PSD state of the given output dimension: cov = A A^T.
Morphism<Gauss> random_state(const Category<Gauss>& cat, std::mt19937_64& rng, const VarList& cod) {
  Eigen::Index m = static_cast<Eigen::Index>(cod.size());
  auto unit = [&]() { return static_cast<double>(rng() % 2001) / 1000.0 - 1.0; };
  Eigen::MatrixXd A(m, m);
  for (Eigen::Index r = 0; r < m; ++r)
    for (Eigen::Index c = 0; c < m; ++c) A(r, c) = unit();
  Eigen::VectorXd mean(m);
  for (Eigen::Index r = 0; r < m; ++r) mean(r) = unit();
  return gmor(cat, {}, cod, Eigen::MatrixXd::Zero(m, 0), A * A.transpose(), mean);
}

}  // namespace

TEST_CASE("gauss composition follows the affine noise propagation") {
  auto cat = gcat1();
  SECTION("identity is neutral") {
    auto f = gmor(cat, vl({"x"}), vl({"y"}), Eigen::MatrixXd::Constant(1, 1, 2.0),
                  Eigen::MatrixXd::Constant(1, 1, 3.0), Eigen::VectorXd::Constant(1, 0.5));
    CHECK(cat.equal(cat.compose(f, cat.identity(vl({"y"}))), f));
    CHECK(cat.equal(cat.compose(cat.identity(vl({"x"})), f), f));
  }
  SECTION("one-dimensional chain multiplies slopes and propagates noise") {
    double a = 1.5, s1 = 0.3, m1 = -0.2, b = -2.0, s2 = 0.7, m2 = 1.1;
    auto f = gmor(cat, vl({"x"}), vl({"y"}), Eigen::MatrixXd::Constant(1, 1, a),
                  Eigen::MatrixXd::Constant(1, 1, s1), Eigen::VectorXd::Constant(1, m1));
    auto g = gmor(cat, vl({"y"}), vl({"z"}), Eigen::MatrixXd::Constant(1, 1, b),
                  Eigen::MatrixXd::Constant(1, 1, s2), Eigen::VectorXd::Constant(1, m2));
    auto h = cat.compose(f, g);
    CHECK(h.payload.M(0, 0) == Catch::Approx(a * b));
    CHECK(h.payload.cov(0, 0) == Catch::Approx(b * b * s1 + s2));
    CHECK(h.payload.mean(0) == Catch::Approx(b * m1 + m2));
  }
  SECTION("dimension mismatches are rejected") {
    auto f = gmor(cat, vl({"x"}), vl({"y"}), Eigen::MatrixXd::Identity(1, 1),
                  Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Zero(1));
    auto two = cat.identity(vl({"a", "b"}));
    CHECK_THROWS_AS(cat.compose(f, two), EndpointMismatch);
  }
}

TEST_CASE("structure morphisms have the expected blocks") {
  auto cat = gcat1();
  SECTION("copy stacks the identity with zero covariance") {
    auto c = cat.copy(vl({"x"}));
    Eigen::MatrixXd expectM(2, 1);
    expectM << 1, 1;
    CHECK((c.payload.M - expectM).cwiseAbs().maxCoeff() == 0.0);
    CHECK(c.payload.cov.cwiseAbs().maxCoeff() == 0.0);
    // Mean of (x,x) and covariance against the direct definition: both legs
    // carry the same value, so projecting either leg undoes the copy.
    auto first = cat.marginal(c, {0});
    CHECK(cat.equal(first, cat.identity(vl({"x"}))));
  }
  SECTION("del after any map equals del") {
    std::mt19937_64 rng(3);
    auto s = random_state(cat, rng, vl({"a", "b"}));
    CHECK(cat.equal(cat.compose(s, cat.del(vl({"a", "b"}))), cat.del(VarList{})));
  }
  SECTION("tensor of two standard normals is the 2-dim standard normal") {
    auto n1 = gmor(cat, {}, vl({"x"}), Eigen::MatrixXd::Zero(1, 0),
                   Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1));
    auto n2 = gmor(cat, {}, vl({"y"}), Eigen::MatrixXd::Zero(1, 0),
                   Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1));
    auto both = cat.tensor(n1, n2);
    CHECK((both.payload.cov - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <= Gauss::kTol);
    CHECK(both.payload.mean.cwiseAbs().maxCoeff() <= Gauss::kTol);
  }
  SECTION("swap is a permutation with zero covariance") {
    auto sw = cat.swap(vl({"x"}), vl({"y"}));
    Eigen::MatrixXd expect(2, 2);
    expect << 0, 1, 1, 0;
    CHECK((sw.payload.M - expect).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("the noise chain assembles the documented covariance") {
  auto cat = gcat1();
  // s_w: unit noise into w; g_x, g_y: add unit noise on top of w.
  auto s_w = kernel_from_morphism(
      cat, gmor(cat, {}, vl({"w"}), Eigen::MatrixXd::Zero(1, 0), Eigen::MatrixXd::Identity(1, 1),
                Eigen::VectorXd::Zero(1)));
  auto add_noise = [&](const char* out) {
    VarList cod{VarName(out), VarName("w")};
    std::sort(cod.begin(), cod.end());
    Eigen::MatrixXd M(2, 1);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(2, 2);
    Eigen::Index pos = cod[0] == VarName("w") ? 1 : 0;
    M.setZero();
    M(pos, 0) = 1;          // the new variable copies w plus noise
    M(1 - pos, 0) = 1;      // w is preserved
    cov(pos, pos) = 1;
    return kernel_from_morphism(cat, gmor(cat, vl({"w"}), cod, M, cov, Eigen::VectorXd::Zero(2)));
  };
  auto g_x = add_noise("x");
  auto g_y = add_noise("y");
  auto assembled = seq(cat, s_w, par(cat, g_x, g_y));
  auto full = embed(cat, assembled);
  CHECK(full.cod == vl({"w", "x", "y"}));
  Eigen::MatrixXd expect(3, 3);
  expect << 1, 1, 1, 1, 2, 1, 1, 1, 2;
  CHECK((full.payload.cov - expect).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(full.payload.mean.cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("conditionals split by regression and reassemble") {
  auto cat = gcat1();
  SECTION("independent blocks give a zero-slope conditional") {
    Eigen::MatrixXd cov(2, 2);
    cov << 2, 0, 0, 3;
    auto s = gmor(cat, {}, vl({"a", "b"}), Eigen::MatrixXd::Zero(2, 0), cov,
                  Eigen::VectorXd::Zero(2));
    auto [marg, cond] = cat.conditional(s, 1);
    CHECK(cond.payload.M.cwiseAbs().maxCoeff() <= Gauss::kTol);
    CHECK(cond.payload.cov(0, 0) == Catch::Approx(3.0));
  }
  SECTION("a 2x2 covariance conditions by its Schur complement") {
    Eigen::MatrixXd cov(2, 2);
    cov << 1, 1, 1, 2;
    auto s = gmor(cat, {}, vl({"a", "b"}), Eigen::MatrixXd::Zero(2, 0), cov,
                  Eigen::VectorXd::Zero(2));
    auto [marg, cond] = cat.conditional(s, 1);
    CHECK(cond.payload.M(0, 0) == Catch::Approx(1.0));
    CHECK(cond.payload.cov(0, 0) == Catch::Approx(1.0));
    CHECK(marg.payload.cov(0, 0) == Catch::Approx(1.0));
  }
  SECTION("the noise-chain covariance conditioned on w gives unit noise around w") {
    Eigen::MatrixXd cov(3, 3);
    cov << 1, 1, 1, 1, 2, 1, 1, 1, 2;
    auto s = gmor(cat, {}, vl({"w", "x", "y"}), Eigen::MatrixXd::Zero(3, 0), cov,
                  Eigen::VectorXd::Zero(3));
    auto [marg, cond] = cat.conditional(s, 1);
    // x|w and y|w each have slope 1 and unit variance, independently.
    Eigen::MatrixXd expectM(2, 1);
    expectM << 1, 1;
    CHECK((cond.payload.M - expectM).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((cond.payload.cov - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-9);
  }
  SECTION("random states reassemble within tolerance") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 40; ++trial) {
      VarList cod = vl({"a", "b", "c", "d"});
      auto s = random_state(cat, rng, cod);
      for (std::size_t k = 0; k <= cod.size(); ++k) {
        auto [marg, cond] = cat.conditional(s, k);
        Eigen::Index da = marg.payload.mean.size();
        Eigen::MatrixXd re_cov(4, 4);
        re_cov.topLeftCorner(da, da) = marg.payload.cov;
        re_cov.topRightCorner(da, 4 - da) = marg.payload.cov * cond.payload.M.transpose();
        re_cov.bottomLeftCorner(4 - da, da) = cond.payload.M * marg.payload.cov;
        re_cov.bottomRightCorner(4 - da, 4 - da) =
            cond.payload.M * marg.payload.cov * cond.payload.M.transpose() + cond.payload.cov;
        CHECK((re_cov - s.payload.cov).cwiseAbs().maxCoeff() <= 1e-7);
      }
    }
  }
  SECTION("a morphism whose tail copies the input is not conditionable on pure noise") {
    // Output a is fresh noise, output b copies the input: no map a -> b can
    // reproduce b, so the split must be rejected.
    Eigen::MatrixXd M(2, 1);
    M << 0, 1;
    Eigen::MatrixXd cov(2, 2);
    cov << 1, 0, 0, 0;
    auto f = gmor(cat, vl({"x"}), vl({"a", "b"}), M, cov, Eigen::VectorXd::Zero(2));
    CHECK_THROWS_AS(cat.conditional(f, 1), SingularBlock);
  }
}

TEST_CASE("comonoid and naturality laws hold within tolerance") {
  auto cat = gcat1();
  std::mt19937_64 rng(31);
  VarList o = vl({"p", "q"});
  auto copy = cat.copy(o);
  SECTION("coassociativity") {
    auto left = cat.compose(copy, cat.tensor(cat.copy(o), cat.identity(o)));
    auto right = cat.compose(copy, cat.tensor(cat.identity(o), cat.copy(o)));
    CHECK(cat.equal(left, right));
  }
  SECTION("counitality") {
    auto left = cat.compose(copy, cat.tensor(cat.del(o), cat.identity(o)));
    auto right = cat.compose(copy, cat.tensor(cat.identity(o), cat.del(o)));
    CHECK(cat.equal(left, cat.identity(o)));
    CHECK(cat.equal(right, cat.identity(o)));
  }
  SECTION("cocommutativity") {
    auto swapped = cat.compose(copy, cat.swap(o, o));
    CHECK(cat.equal(swapped, copy));
  }
  SECTION("kernels marginalize back to the identity") {
    for (int trial = 0; trial < 10; ++trial) {
      // Build an input-preserving kernel from a random core.
      auto unit = [&]() { return static_cast<double>(rng() % 2001) / 1000.0 - 1.0; };
      Eigen::MatrixXd A(2, 2);
      for (Eigen::Index r = 0; r < 2; ++r)
        for (Eigen::Index c = 0; c < 2; ++c) A(r, c) = unit();
      Eigen::MatrixXd Mc(2, 2);
      for (Eigen::Index r = 0; r < 2; ++r)
        for (Eigen::Index c = 0; c < 2; ++c) Mc(r, c) = unit();
      auto core = gmor(cat, vl({"a", "b"}), vl({"c", "d"}), Mc, A * A.transpose(),
                       Eigen::VectorXd::Zero(2));
      auto k = make_kernel(cat, vs({"a", "b"}), vs({"a", "b", "c", "d"}), core);
      auto back = cat.marginal_to(embed(cat, k), k.dom);
      CHECK(cat.equal(back, cat.identity(vl({"a", "b"}))));
    }
  }
}

TEST_CASE("composition is associative within tolerance") {
  auto cat = gcat1();
  std::mt19937_64 rng(53);
  auto unit = [&]() { return static_cast<double>(rng() % 2001) / 1000.0 - 1.0; };
  auto random_map = [&](const VarList& dom, const VarList& cod) {
    Eigen::Index n = static_cast<Eigen::Index>(dom.size());
    Eigen::Index m = static_cast<Eigen::Index>(cod.size());
    Eigen::MatrixXd M(m, n), A(m, m);
    for (Eigen::Index r = 0; r < m; ++r) {
      for (Eigen::Index c = 0; c < n; ++c) M(r, c) = unit();
      for (Eigen::Index c = 0; c < m; ++c) A(r, c) = unit();
    }
    Eigen::VectorXd mean(m);
    for (Eigen::Index r = 0; r < m; ++r) mean(r) = unit();
    return gmor(cat, dom, cod, M, A * A.transpose(), mean);
  };
  for (int t = 0; t < 30; ++t) {
    auto f = random_map(vl({"a", "b"}), vl({"c", "d"}));
    auto g = random_map(vl({"c", "d"}), vl({"e"}));
    auto h = random_map(vl({"e"}), vl({"p", "q"}));
    CHECK(cat.equal(cat.compose(cat.compose(f, g), h), cat.compose(f, cat.compose(g, h))));
  }
}

TEST_CASE("gauss equality is tolerant to tiny perturbations") {
  auto cat = gcat1();
  Eigen::MatrixXd cov(1, 1);
  cov << 0.5;
  auto a = gmor(cat, {}, vl({"x"}), Eigen::MatrixXd::Zero(1, 0), cov, Eigen::VectorXd::Zero(1));
  auto b = a;
  b.payload.cov(0, 0) += 1e-12;
  CHECK(cat.equal(a, b));
  b.payload.cov(0, 0) += 1e-6;
  CHECK_FALSE(cat.equal(a, b));
}
