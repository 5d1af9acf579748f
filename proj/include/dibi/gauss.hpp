#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "dibi/errors.hpp"
#include "dibi/markov.hpp"
#include "dibi/varspace.hpp"

namespace dibi {

// The Gaussian instance: a morphism n -> m applies an affine map and adds
// Gaussian noise, represented by named fields (matrix, covariance, mean).
// Equality and law checks hold within an absolute entrywise tolerance.
struct Gauss {
  using Object = std::vector<Eigen::Index>;  // dimension per list position
  using Theta = Assignment<Eigen::Index>;

  static constexpr double kTol = 1e-9;

  struct Payload {
    Object dom;
    Object cod;
    Eigen::MatrixXd M;     // cod_dim x dom_dim
    Eigen::MatrixXd cov;   // cod_dim x cod_dim, symmetric PSD
    Eigen::VectorXd mean;  // cod_dim
  };

  static Eigen::Index total(const Object& o) {
    return std::accumulate(o.begin(), o.end(), Eigen::Index{0});
  }

  static Object object_of(const Theta& theta, const VarList& l) {
    Object o;
    o.reserve(l.size());
    for (const auto& v : l) o.push_back(theta(v));
    return o;
  }

  static Payload make(Object dom, Object cod, Eigen::MatrixXd M, Eigen::MatrixXd cov,
                      Eigen::VectorXd mean) {
    Eigen::Index n = total(dom), m = total(cod);
    if (M.rows() != m || M.cols() != n || cov.rows() != m || cov.cols() != m || mean.size() != m)
      throw DimensionMismatch("gauss payload dimensions are inconsistent");
    if (m > 0) {
      if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > kTol)
        throw ShapeError("gauss covariance is not symmetric");
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (cov + cov.transpose()));
      if (es.eigenvalues().minCoeff() < -kTol)
        throw ShapeError("gauss covariance is not positive semidefinite");
    }
    return Payload{std::move(dom), std::move(cod), std::move(M), std::move(cov), std::move(mean)};
  }

  static Payload identity(const Object& o) {
    Eigen::Index n = total(o);
    return Payload{o, o, Eigen::MatrixXd::Identity(n, n), Eigen::MatrixXd::Zero(n, n),
                   Eigen::VectorXd::Zero(n)};
  }

  static Payload copy(const Object& o) {
    Eigen::Index n = total(o);
    Object cod = o;
    cod.insert(cod.end(), o.begin(), o.end());
    Eigen::MatrixXd M(2 * n, n);
    M << Eigen::MatrixXd::Identity(n, n), Eigen::MatrixXd::Identity(n, n);
    return Payload{o, std::move(cod), std::move(M), Eigen::MatrixXd::Zero(2 * n, 2 * n),
                   Eigen::VectorXd::Zero(2 * n)};
  }

  static Payload del(const Object& o) {
    Eigen::Index n = total(o);
    return Payload{o, {}, Eigen::MatrixXd::Zero(0, n), Eigen::MatrixXd::Zero(0, 0),
                   Eigen::VectorXd::Zero(0)};
  }

  static Payload rewire(const Object& o, const std::vector<std::size_t>& perm) {
    Object cod(o.size());
    for (std::size_t i = 0; i < o.size(); ++i) cod[perm[i]] = o[i];
    Eigen::Index n = total(o);
    // Offsets of each position in dom and cod coordinates.
    std::vector<Eigen::Index> dom_off(o.size() + 1, 0), cod_off(cod.size() + 1, 0);
    for (std::size_t i = 0; i < o.size(); ++i) dom_off[i + 1] = dom_off[i] + o[i];
    for (std::size_t i = 0; i < cod.size(); ++i) cod_off[i + 1] = cod_off[i] + cod[i];
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < o.size(); ++i) {
      M.block(cod_off[perm[i]], dom_off[i], o[i], o[i]) =
          Eigen::MatrixXd::Identity(o[i], o[i]);
    }
    return Payload{o, std::move(cod), std::move(M), Eigen::MatrixXd::Zero(n, n),
                   Eigen::VectorXd::Zero(n)};
  }

  static Payload compose(const Payload& f, const Payload& g) {
    if (f.cod != g.dom) throw EndpointMismatch("gauss compose: object mismatch");
    return Payload{f.dom, g.cod, g.M * f.M, g.M * f.cov * g.M.transpose() + g.cov,
                   g.M * f.mean + g.mean};
  }

  static Payload tensor(const Payload& f, const Payload& g) {
    Object dom = f.dom, cod = f.cod;
    dom.insert(dom.end(), g.dom.begin(), g.dom.end());
    cod.insert(cod.end(), g.cod.begin(), g.cod.end());
    Eigen::Index m1 = f.M.rows(), n1 = f.M.cols(), m2 = g.M.rows(), n2 = g.M.cols();
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m1 + m2, n1 + n2);
    M.topLeftCorner(m1, n1) = f.M;
    M.bottomRightCorner(m2, n2) = g.M;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(m1 + m2, m1 + m2);
    cov.topLeftCorner(m1, m1) = f.cov;
    cov.bottomRightCorner(m2, m2) = g.cov;
    Eigen::VectorXd mean(m1 + m2);
    mean << f.mean, g.mean;
    return Payload{std::move(dom), std::move(cod), std::move(M), std::move(cov), std::move(mean)};
  }

  static bool close(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    if (a.size() == 0) return true;
    return (a - b).cwiseAbs().maxCoeff() <= kTol;
  }

  static bool equal(const Payload& f, const Payload& g) {
    return f.dom == g.dom && f.cod == g.cod && close(f.M, g.M) && close(f.cov, g.cov) &&
           close(f.mean, g.mean);
  }

  static Capabilities caps() {
    return Capabilities{true, true, false, kTol};
  }

  // Splits f : n -> A ++ B (split after the first k list positions) into the
  // marginal n -> A and a conditional A -> B. The conditional must reproduce
  // the joint law for every input, which pins its matrix down to the linear
  // system  M_c [cov_AA | M_A] = [cov_BA | M_B], solved by pseudo-inverse;
  // if the system is inconsistent the reassembly check fails.
  static std::pair<Payload, Payload> conditional(const Payload& f, std::size_t k) {
    Object ao(f.cod.begin(), f.cod.begin() + static_cast<std::ptrdiff_t>(k));
    Object bo(f.cod.begin() + static_cast<std::ptrdiff_t>(k), f.cod.end());
    Eigen::Index da = total(ao), db = total(bo), n = f.M.cols();
    Eigen::MatrixXd MA = f.M.topRows(da), MB = f.M.bottomRows(db);
    Eigen::MatrixXd SAA = f.cov.topLeftCorner(da, da);
    Eigen::MatrixXd SBA = f.cov.bottomLeftCorner(db, da);
    Eigen::MatrixXd SBB = f.cov.bottomRightCorner(db, db);
    Eigen::VectorXd muA = f.mean.head(da), muB = f.mean.tail(db);

    Eigen::MatrixXd X(da, da + n);
    X << SAA, MA;
    Eigen::MatrixXd Y(db, da + n);
    Y << SBA, MB;
    Eigen::MatrixXd Mc;
    if (da == 0) {
      Mc = Eigen::MatrixXd::Zero(db, da);
    } else {
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> dec(X);
      Mc = Y * dec.pseudoInverse();
    }
    Eigen::MatrixXd covc = SBB - Mc * SAA * Mc.transpose();
    covc = 0.5 * (covc + covc.transpose());
    Eigen::VectorXd meanc = muB - Mc * muA;

    Payload marg{f.dom, ao, MA, SAA, muA};
    Payload cond{ao, bo, Mc, covc, meanc};

    // Reassembly: copy the A output and run the conditional on one leg.
    Eigen::MatrixXd Mre(da + db, n);
    Mre << MA, Mc * MA;
    Eigen::MatrixXd covre(da + db, da + db);
    covre.topLeftCorner(da, da) = SAA;
    covre.topRightCorner(da, db) = SAA * Mc.transpose();
    covre.bottomLeftCorner(db, da) = Mc * SAA;
    covre.bottomRightCorner(db, db) = Mc * SAA * Mc.transpose() + covc;
    Eigen::VectorXd meanre(da + db);
    meanre << muA, Mc * muA + meanc;
    Payload re{f.dom, f.cod, Mre, covre, meanre};
    if (!equal(re, f))
      throw SingularBlock("gauss conditional: no conditional reassembles this morphism");
    return {std::move(marg), std::move(cond)};
  }

  // Factors f through deleting the masked input positions: the corresponding
  // matrix columns must vanish within tolerance.
  static std::optional<Payload> factor_input(const Payload& f, const std::vector<bool>& drop) {
    std::vector<Eigen::Index> off(f.dom.size() + 1, 0);
    for (std::size_t i = 0; i < f.dom.size(); ++i) off[i + 1] = off[i] + f.dom[i];
    Object kept;
    Eigen::Index kept_dims = 0;
    for (std::size_t i = 0; i < f.dom.size(); ++i) {
      if (drop[i]) {
        if (f.dom[i] > 0 && f.M.rows() > 0 &&
            f.M.middleCols(off[i], f.dom[i]).cwiseAbs().maxCoeff() > kTol)
          return std::nullopt;
      } else {
        kept.push_back(f.dom[i]);
        kept_dims += f.dom[i];
      }
    }
    Eigen::MatrixXd M(f.M.rows(), kept_dims);
    Eigen::Index c = 0;
    for (std::size_t i = 0; i < f.dom.size(); ++i) {
      if (!drop[i]) {
        M.middleCols(c, f.dom[i]) = f.M.middleCols(off[i], f.dom[i]);
        c += f.dom[i];
      }
    }
    return Payload{std::move(kept), f.cod, std::move(M), f.cov, f.mean};
  }
};

}  // namespace dibi
