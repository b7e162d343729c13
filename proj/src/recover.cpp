#include "pepforge/recover.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace pepforge {

std::string to_string(Certification c) {
  switch (c) {
    case Certification::certified_tight: return "certified-tight";
    case Certification::upper_bound_only: return "upper-bound-only";
    case Certification::numerical_failure: return "numerical-failure";
  }
  return "?";
}

GramFactor factor_gram(const Eigen::MatrixXd& G, double rank_tol) {
  if (G.rows() != G.cols()) throw RecoveryError("Gram matrix is not square");
  GramFactor out;
  const auto n = G.rows();
  if (n == 0) return out;
  const double asym = (G - G.transpose()).cwiseAbs().maxCoeff();
  const double scale = std::max(G.cwiseAbs().maxCoeff(), 1e-300);
  if (asym > 1e-8 * scale) throw RecoveryError("Gram matrix is not symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (G + G.transpose()));
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double top = std::max(ev.maxCoeff(), 0.0);
  const double cut = rank_tol * top;
  if (ev.minCoeff() < -std::max(cut, 1e-12))
    throw RecoveryError("Gram matrix has eigenvalue " + std::to_string(ev.minCoeff()) + " (largest " +
                        std::to_string(top) + ")");

  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = n - 1; k >= 0; --k)
    if (ev(k) > cut && ev(k) > 0.0) keep.push_back(k);
  out.rank = static_cast<int>(keep.size());
  out.vectors.resize(n, out.rank);
  for (int c = 0; c < out.rank; ++c) {
    const Eigen::Index k = keep[static_cast<std::size_t>(c)];
    out.vectors.col(c) = std::sqrt(ev(k)) * es.eigenvectors().col(k);
  }
  out.reconstruction_error = n > 0 ? (out.vectors * out.vectors.transpose() - G).cwiseAbs().maxCoeff() : 0.0;
  return out;
}

WorstCaseInstance recover_instance(const Problem& p, const sdp::CompiledSdp& compiled, const sdp::SdpSolution& sol,
                                   double rank_tol) {
  WorstCaseInstance inst;
  inst.value = sol.value();
  for (const auto& l : p.basis()) inst.vector_tags.push_back(l.tag);
  for (const auto& v : p.fvals()) inst.scalar_tags.push_back(v.tag);

  if (compiled.gram_block >= 0) {
    const GramFactor f = factor_gram(sol.primal.at(static_cast<std::size_t>(compiled.gram_block)), rank_tol);
    inst.dimension = f.rank;
    inst.vectors = f.vectors;
    inst.reconstruction_error = f.reconstruction_error;
  } else {
    inst.vectors.resize(0, 0);
  }
  if (compiled.fval_block >= 0) {
    const Eigen::MatrixXd& fv = sol.primal.at(static_cast<std::size_t>(compiled.fval_block));
    inst.scalars.assign(fv.data(), fv.data() + fv.size());
  }
  return inst;
}

namespace {

std::vector<Eigen::VectorXd> basis_vectors(const WorstCaseInstance& inst) {
  std::vector<Eigen::VectorXd> out;
  for (Eigen::Index k = 0; k < inst.vectors.rows(); ++k) out.push_back(inst.vectors.row(k).transpose());
  return out;
}

Eigen::VectorXd eval(const VectorExpr& v, const std::vector<Eigen::VectorXd>& basis, int dim) {
  if (v.is_zero()) return Eigen::VectorXd::Zero(dim);
  return v.evaluate(basis);
}

}  // namespace

NetworkRecovery recover_network_matrix(const WorstCaseInstance& inst, const ConsensusDataHandle& steps, double tol) {
  NetworkRecovery out;
  const int A = steps.agents;
  if (A < 2) {
    out.message = "consensus data needs at least two agents";
    return out;
  }
  const std::vector<Eigen::VectorXd> basis = basis_vectors(inst);
  const int d = inst.dimension;
  const Eigen::MatrixXd Q = ones_basis(A).rightCols(A - 1);
  const Eigen::MatrixXd J = Eigen::MatrixXd::Constant(A, A, 1.0 / A);

  // Unknowns: the symmetric (A-1)x(A-1) matrix Z in W = J + Q Z Q^T.
  const int p = A - 1;
  std::vector<std::pair<int, int>> pairs;
  for (int k = 0; k < p; ++k)
    for (int l = k; l < p; ++l) pairs.emplace_back(k, l);
  const auto unknowns = static_cast<Eigen::Index>(pairs.size());

  const auto n_steps = static_cast<Eigen::Index>(steps.steps.size());
  const Eigen::Index rows_per_step = static_cast<Eigen::Index>(A) * d;
  Eigen::MatrixXd design(n_steps * rows_per_step, unknowns);
  Eigen::VectorXd target(n_steps * rows_per_step);
  double y_norm_sq = 0.0;
  for (Eigen::Index i = 0; i < n_steps; ++i) {
    const ConsensusStep& st = steps.steps[static_cast<std::size_t>(i)];
    if (static_cast<int>(st.x.size()) != A || static_cast<int>(st.y.size()) != A) {
      out.message = "consensus step has the wrong number of agents";
      return out;
    }
    Eigen::MatrixXd X(A, d), Y(A, d);
    for (int a = 0; a < A; ++a) {
      X.row(a) = eval(st.x[static_cast<std::size_t>(a)], basis, d).transpose();
      Y.row(a) = eval(st.y[static_cast<std::size_t>(a)], basis, d).transpose();
    }
    y_norm_sq += Y.squaredNorm();
    const Eigen::MatrixXd rhs = Y - J * X;
    const Eigen::MatrixXd QtX = Q.transpose() * X;
    for (Eigen::Index u = 0; u < unknowns; ++u) {
      const auto [k, l] = pairs[static_cast<std::size_t>(u)];
      Eigen::MatrixXd E = Eigen::MatrixXd::Zero(p, p);
      E(k, l) = 1.0;
      E(l, k) = 1.0;
      const Eigen::MatrixXd col = Q * E * QtX;
      design.block(i * rows_per_step, u, rows_per_step, 1) = Eigen::Map<const Eigen::VectorXd>(col.data(), rows_per_step);
    }
    target.segment(i * rows_per_step, rows_per_step) = Eigen::Map<const Eigen::VectorXd>(rhs.data(), rows_per_step);
  }

  Eigen::VectorXd z = Eigen::VectorXd::Zero(unknowns);
  if (design.rows() > 0) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
    cod.setThreshold(1e-10);
    cod.compute(design);
    out.underdetermined = cod.rank() < unknowns;
    z = cod.solve(target);
  } else {
    out.underdetermined = true;
  }

  Eigen::MatrixXd Z(p, p);
  for (Eigen::Index u = 0; u < unknowns; ++u) {
    const auto [k, l] = pairs[static_cast<std::size_t>(u)];
    Z(k, l) = z(u);
    Z(l, k) = z(u);
  }
  out.W = J + Q * Z * Q.transpose();
  const double res = design.rows() > 0 ? (design * z - target).norm() : 0.0;
  out.residual = res / std::max(1.0, std::sqrt(y_norm_sq));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Z, Eigen::EigenvaluesOnly);
  out.spectrum = es.eigenvalues();
  const double lam = steps.lam;
  const bool spectrum_ok = out.spectrum.size() == 0 ||
                           (out.spectrum.minCoeff() >= -lam - tol && out.spectrum.maxCoeff() <= lam + tol);
  std::ostringstream msg;
  msg.precision(6);
  if (out.residual > tol) {
    msg << "least-squares residual " << out.residual << " exceeds " << tol;
  } else if (!spectrum_ok) {
    msg << "eigenvalues on 1-perp span [" << out.spectrum.minCoeff() << ", " << out.spectrum.maxCoeff()
        << "], outside [-" << lam << ", " << lam << "]";
  } else {
    msg << "recovered W with residual " << out.residual;
  }
  if (out.underdetermined) msg << " (underdetermined: minimum-norm W)";
  out.message = msg.str();
  out.success = out.residual <= tol && spectrum_ok;
  return out;
}

VerificationReport verify_instance(const WorstCaseInstance& inst, const PepProblem& p, double tol,
                                   double network_tol) {
  VerificationReport rep;
  const Problem& prob = p.problem;
  if (inst.vectors.rows() != prob.basis_size() || static_cast<int>(inst.scalars.size()) != prob.scalar_count()) {
    rep.reason = "instance does not match the problem's variables";
    return rep;
  }
  const Eigen::MatrixXd G = inst.gram();
  double scale = 1.0;
  for (Eigen::Index k = 0; k < G.rows(); ++k) scale = std::max(scale, G(k, k));
  for (double f : inst.scalars) scale = std::max(scale, std::abs(f));
  rep.tolerance = tol * scale;

  rep.max_residual = prob.max_residual(G, inst.scalars);
  rep.objective_at_instance = prob.objective().evaluate(G, inst.scalars);
  rep.objective_error = std::abs(rep.objective_at_instance - inst.value);

  const std::vector<Eigen::VectorXd> basis = basis_vectors(inst);
  const int d = inst.dimension;
  bool all_exact = true, records_ok = true, network_ok = true;
  for (const InterpolationRecord& r : p.records) {
    RecordCheck rc{r.name, r.exact, {}};
    std::visit(
        [&](const auto& h) {
          using H = std::decay_t<decltype(h)>;
          if constexpr (std::is_same_v<H, FunctionDataHandle>) {
            std::vector<NumericTriple> data;
            for (const auto& pt : h.points)
              data.push_back({eval(pt.x, basis, d), eval(pt.g, basis, d),
                              inst.scalars[static_cast<std::size_t>(pt.f.id)], pt.name});
            rc.report = check_numeric(data, r.spec, rep.tolerance);
          } else if constexpr (std::is_same_v<H, OperatorDataHandle>) {
            std::vector<NumericPair> data;
            for (const auto& pr : h.pairs) data.push_back({eval(pr.x, basis, d), eval(pr.q, basis, d), pr.name});
            rc.report = check_numeric(data, r.spec, rep.tolerance);
          } else if constexpr (std::is_same_v<H, LinearMapDataHandle>) {
            std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> fw, adj;
            for (const auto& [x, y] : h.forward) fw.emplace_back(eval(x, basis, d), eval(y, basis, d));
            for (const auto& [u, v] : h.adjoint) adj.emplace_back(eval(u, basis, d), eval(v, basis, d));
            rc.report = check_numeric_linear(fw, adj, h.L, rep.tolerance);
          } else {
            std::vector<NumericConsensusStep> data;
            for (const auto& st : h.steps) {
              NumericConsensusStep ns;
              for (const auto& x : st.x) ns.x.push_back(eval(x, basis, d));
              for (const auto& y : st.y) ns.y.push_back(eval(y, basis, d));
              data.push_back(std::move(ns));
            }
            rc.report = check_numeric_consensus(data, h.lam, rep.tolerance);
            rep.network = recover_network_matrix(inst, h, network_tol);
            network_ok = network_ok && rep.network->success;
          }
        },
        r.handle);
    all_exact = all_exact && r.exact;
    records_ok = records_ok && rc.report.feasible;
    rep.records.push_back(std::move(rc));
  }

  const bool objective_ok = rep.objective_error <= tol * (1.0 + std::abs(inst.value)) * scale;
  if (rep.max_residual > rep.tolerance || !objective_ok || !records_ok) {
    rep.certification = Certification::numerical_failure;
    std::ostringstream os;
    os.precision(6);
    os << "recovered instance fails its own problem: residual " << rep.max_residual << ", objective error "
       << rep.objective_error << " (tolerance " << rep.tolerance << ")";
    rep.reason = os.str();
  } else if (!all_exact) {
    rep.certification = Certification::upper_bound_only;
    rep.reason = "upper bound only: relaxation in use";
  } else if (!network_ok) {
    rep.certification = Certification::upper_bound_only;
    rep.reason = "upper bound only: no network matrix explains the worst case (" + rep.network->message + ")";
  } else {
    rep.certification = Certification::certified_tight;
    rep.reason = "instance satisfies exact interpolation conditions and attains the bound";
  }
  return rep;
}

// ------------------------------------------------------------------- export

namespace {

std::string safe_tag(const std::string& tag) {
  std::string out = tag;
  for (char& c : out)
    if (std::isspace(static_cast<unsigned char>(c))) c = '_';
  return out.empty() ? "_" : out;
}

}  // namespace

void write_instance(std::ostream& os, const WorstCaseInstance& inst, const VerificationReport* report) {
  os << "# pep-forge instance v1\n";
  os << std::setprecision(17);
  os << "dimension " << inst.dimension << "\n";
  os << "value " << inst.value << "\n";
  os << "reconstruction_error " << inst.reconstruction_error << "\n";
  os << "vectors " << inst.vectors.rows() << "\n";
  for (Eigen::Index k = 0; k < inst.vectors.rows(); ++k) {
    os << safe_tag(inst.vector_tags[static_cast<std::size_t>(k)]);
    for (Eigen::Index c = 0; c < inst.vectors.cols(); ++c) os << ' ' << inst.vectors(k, c);
    os << "\n";
  }
  os << "scalars " << inst.scalars.size() << "\n";
  for (std::size_t k = 0; k < inst.scalars.size(); ++k) os << safe_tag(inst.scalar_tags[k]) << ' ' << inst.scalars[k] << "\n";
  if (report) {
    os << "# certification " << to_string(report->certification) << "\n";
    os << "# max_residual " << report->max_residual << "\n";
    os << "# objective_error " << report->objective_error << "\n";
    for (const auto& r : report->records)
      os << "# record " << r.name << (r.exact ? " exact" : " relaxed") << " max_residual " << r.report.max_residual
         << "\n";
    if (report->network) os << "# network_residual " << report->network->residual << "\n";
  }
}

WorstCaseInstance read_instance(std::istream& is) {
  WorstCaseInstance inst;
  std::string line;
  if (!std::getline(is, line) || line != "# pep-forge instance v1") throw RecoveryError("not a pep-forge instance file");
  auto next = [&](const std::string& key) {
    while (std::getline(is, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ls(line);
      std::string k;
      ls >> k;
      if (k != key) throw RecoveryError("expected '" + key + "' in instance file, got '" + k + "'");
      std::string rest;
      std::getline(ls, rest);
      return rest;
    }
    throw RecoveryError("instance file ended before '" + key + "'");
  };
  auto data_line = [&]() {
    while (std::getline(is, line))
      if (!line.empty() && line[0] != '#') return line;
    throw RecoveryError("instance file truncated");
  };
  try {
    inst.dimension = std::stoi(next("dimension"));
    inst.value = std::stod(next("value"));
    inst.reconstruction_error = std::stod(next("reconstruction_error"));
    const int n = std::stoi(next("vectors"));
    inst.vectors.resize(n, inst.dimension);
    for (int k = 0; k < n; ++k) {
      std::istringstream ls(data_line());
      std::string tag;
      ls >> tag;
      inst.vector_tags.push_back(tag);
      for (int c = 0; c < inst.dimension; ++c)
        if (!(ls >> inst.vectors(k, c))) throw RecoveryError("short vector row for '" + tag + "'");
    }
    const int m = std::stoi(next("scalars"));
    for (int k = 0; k < m; ++k) {
      std::istringstream ls(data_line());
      std::string tag;
      double v = 0.0;
      if (!(ls >> tag >> v)) throw RecoveryError("malformed scalar row");
      inst.scalar_tags.push_back(tag);
      inst.scalars.push_back(v);
    }
  } catch (const std::invalid_argument&) {
    throw RecoveryError("malformed number in instance file");
  } catch (const std::out_of_range&) {
    throw RecoveryError("number out of range in instance file");
  }
  return inst;
}

}  // namespace pepforge
