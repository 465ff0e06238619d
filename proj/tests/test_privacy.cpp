#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "ppsd/privacy.hpp"

using namespace ppsd;

namespace {

// Five-node experiment topology: N_1^out = {2,4,5}, N_1^in = {2,3}.
Digraph experiment_graph() {
  return Digraph::from_edge_list(5, {{2, 1}, {4, 1}, {5, 1}, {1, 2}, {3, 2},
                                     {1, 3}, {3, 4}, {4, 5}});
}

RunRecord audited_run(int k_max = 301, std::uint64_t seed = 11) {
  Digraph g = experiment_graph();
  ProblemInstance inst = generate_rendezvous(5, 1, 5.0, 42);
  EngineConfig cfg;
  cfg.seed = seed;
  cfg.k_max = k_max;
  cfg.epsilon = 0.0;
  return run(g, inst, cfg);
}

Eigen::VectorXd dvec(double v) { return Eigen::VectorXd::Constant(1, v); }

}  // namespace

TEST_CASE("attacker log structure") {
  RunRecord rec = audited_run(40);

  AttackerLog empty = record_view(rec, {}, 10);
  CHECK(empty.entries.empty());

  AttackerLog log = record_view(rec, {4, 5}, 30);
  bool saw_c41 = false, saw_c51 = false;
  for (const auto& e : log.entries) {
    // No beta substate of any normal agent may ever appear.
    CHECK(e.label.find("y_beta") == std::string::npos);
    if (e.label.find("agent=4/recv/from=1/Cy") != std::string::npos) saw_c41 = true;
    if (e.label.find("agent=5/recv/from=1/Cy") != std::string::npos) saw_c51 = true;
  }
  CHECK(saw_c41);
  CHECK(saw_c51);

  CHECK_THROWS_AS(record_view(rec, {4}, 1000), std::invalid_argument);
  CHECK_THROWS_AS(record_view(rec, {9}, 5), std::invalid_argument);
}

TEST_CASE("shadow step-size substitution matches the closed form") {
  RunRecord rec = audited_run(10);
  // gamma~ = gamma * y / (y + delta_alpha) with y = 0.2, delta_alpha = 0.1,
  // gamma = 0.5 gives exactly 1/3.
  ShadowSpec spec;
  spec.target_i = 1;
  spec.accomplice_m = 2;
  spec.case_tag = ShadowCase::I;
  spec.delta = dvec(0.3);
  spec.delta_alpha = dvec(0.1);
  spec.delta_beta = dvec(0.2);
  RunRecord doctored = rec;
  doctored.states[0].agents[0].y_alpha = dvec(0.2);
  doctored.states[0].agents[0].y_beta =
      dvec(doctored.states[0].grads[0](0) - 0.2);
  doctored.weights.iterations[0].Lambda[0] = DiagWeight::diagonal({0.5});
  ShadowRun shadow = construct_shadow(doctored, spec);
  CHECK(shadow.weights.at(0).Lambda_of(1)(0) == doctest::Approx(0.5 * 0.2 / 0.3).epsilon(1e-12));
}

TEST_CASE("zero perturbation reproduces the run exactly") {
  RunRecord rec = audited_run(60);
  std::mt19937_64 rng(5);
  ShadowSpec spec = make_shadow_spec(rec, 1, 2, dvec(0.0), rng);
  ShadowRun shadow = construct_shadow(rec, spec);
  const auto& w0 = shadow.weights.at(0);
  const auto& o0 = rec.weights.at(0);
  for (const auto& [key, dw] : o0.C) {
    for (int l = 0; l < 1; ++l) REQUIRE(dw(l) == w0.C_at(key.first, key.second)(l));
  }
  AuditResult audit = verify_indistinguishable(rec, spec, {4, 5}, 59, 1e-9);
  CHECK(audit.pass);
  CHECK(audit.max_deviation == 0.0);
}

TEST_CASE("shadow weights keep the augmented matrix column-stochastic") {
  RunRecord rec = audited_run(30);
  std::mt19937_64 rng(6);
  for (double mag : {1.0, 100.0, 1e4}) {
    ShadowSpec spec = make_shadow_spec(rec, 1, 2, dvec(mag * 0.83), rng);
    ShadowRun shadow = construct_shadow(rec, spec);
    Eigen::MatrixXd m = assemble_augmented(rec.graph, shadow.weights.at(0), 0);
    for (int col = 0; col < m.cols(); ++col) {
      REQUIRE(std::abs(m.col(col).sum() - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("indistinguishability holds for both cases at the audit tolerance") {
  RunRecord rec = audited_run(201);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 5000.0);
  Eigen::VectorXd delta = dvec(u(rng));

  ShadowSpec caseI = make_shadow_spec(rec, 1, 2, delta, rng, ShadowCase::I);
  AuditResult a1 = verify_indistinguishable(rec, caseI, {4, 5}, 200, 1e-9);
  CHECK(a1.pass);
  CHECK(a1.max_deviation <= 1e-9);
  CHECK(a1.gradient_shift_error <= 1e-12 * (1.0 + delta.norm()));
  // Absorption: the perturbation is gone after iteration 0.
  CHECK(a1.absorption_deviation <= 1e-10);

  ShadowSpec caseII = make_shadow_spec(rec, 1, 2, delta, rng, ShadowCase::II);
  AuditResult a2 = verify_indistinguishable(rec, caseII, {4, 5}, 200, 1e-9);
  CHECK(a2.pass);
  CHECK(a2.absorption_deviation <= 1e-10);
}

TEST_CASE("tampered shadow fails the audit") {
  RunRecord rec = audited_run(101);
  std::mt19937_64 rng(8);
  ShadowSpec spec = make_shadow_spec(rec, 1, 2, dvec(1.7), rng, ShadowCase::I);
  ShadowRun shadow = construct_shadow(rec, spec);
  // Drop the +delta correction term from C~_mi, keeping only the rescale.
  const auto& y0 = rec.states[0].agents[0];
  const double yi_new = y0.y_alpha(0) + spec.delta_alpha(0);
  const double scale_only = rec.weights.at(0).C_at(2, 1)(0) * y0.y_alpha(0) / yi_new;
  shadow.weights.iterations[0].C[{2, 1}] = DiagWeight::diagonal({scale_only});
  AuditResult audit = audit_with_shadow(rec, shadow, spec, {4, 5}, 100, 1e-9);
  CHECK_FALSE(audit.pass);
  CHECK(audit.max_deviation > 1e-3);
}

TEST_CASE("sweep passes the magnitude ladder and rejects a total corruption") {
  RunRecord rec = audited_run(151);
  std::mt19937_64 rng(9);
  std::vector<Eigen::VectorXd> ladder;
  for (double mag : {1.0, 1e2, 1e4, 1e6}) ladder.push_back(dvec(0.6 * mag));
  SweepResult sweep = privacy_sweep(rec, 1, 2, ladder, {4, 5}, 150, 1e-9, rng);
  CHECK(sweep.passes == 4);
  CHECK(sweep.total == 4);

  // All neighbors of agent 1 corrupted: no accomplice remains.
  CHECK_THROWS_AS(privacy_sweep(rec, 1, 2, ladder, {2, 3, 4, 5}, 150, 1e-9, rng),
                  std::invalid_argument);

  SweepResult single = privacy_sweep(rec, 1, 2, {dvec(0.0)}, {4, 5}, 150, 1e-9, rng);
  CHECK(single.passes == 1);
}

TEST_CASE("inference attack recovers the gradient at the optimum") {
  Digraph g = experiment_graph();
  ProblemInstance inst = generate_rendezvous(5, 1, 5.0, 42);
  EngineConfig cfg;
  cfg.seed = 12;
  cfg.k_max = 6000;
  cfg.epsilon = 1e-8;
  RunRecord rec = run(g, inst, cfg);
  REQUIRE(rec.stop_reason == "converged");

  // Anchor identity at initialization.
  for (int i = 0; i < 5; ++i) {
    REQUIRE(rec.states[0].agents[i].y_alpha(0) + rec.states[0].agents[i].y_beta(0) ==
            rec.states[0].grads[i](0));
  }

  AttackerLog log = record_view(rec, {2, 3, 4, 5}, rec.weights.size() - 1);
  Eigen::VectorXd estimate = inference_attack(log, g, 1);
  Eigen::VectorXd truth = inst.gradient_of(1)(*inst.minimizer);
  CHECK((estimate - truth).norm() <= 1e-4);

  // A single uncorrupted neighbor starves the accumulator.
  AttackerLog partial = record_view(rec, {3, 4, 5}, rec.weights.size() - 1);
  CHECK_THROWS_AS(inference_attack(partial, g, 1), std::invalid_argument);
}

TEST_CASE("attack error shrinks with the run residual") {
  Digraph g = experiment_graph();
  ProblemInstance inst = generate_rendezvous(5, 1, 5.0, 42);
  double previous_error = 1e9;
  for (double eps : {1e-4, 1e-8}) {
    EngineConfig cfg;
    cfg.seed = 13;
    cfg.k_max = 8000;
    cfg.epsilon = eps;
    RunRecord rec = run(g, inst, cfg);
    REQUIRE(rec.stop_reason == "converged");
    AttackerLog log = record_view(rec, {2, 3, 4, 5}, rec.weights.size() - 1);
    const double err = (inference_attack(log, g, 1) - inst.gradient_of(1)(*inst.minimizer)).norm();
    CHECK(err <= 10.0 * eps);
    CHECK(err < previous_error);
    previous_error = err;
  }
}

TEST_CASE("eavesdropper log hides exactly the one channel product") {
  RunRecord rec = audited_run(50);
  AttackerLog log = eavesdropper_view(rec, 1, 2, 20);
  bool saw_hidden_k0 = false, saw_hidden_k1 = false, saw_other_k0 = false;
  for (const auto& e : log.entries) {
    if (e.label.find("ch=2<-1/Cy") != std::string::npos) {
      if (e.k == 0) saw_hidden_k0 = true;
      if (e.k == 1) saw_hidden_k1 = true;
    }
    if (e.k == 0 && e.label.find("ch=4<-1/Cy") != std::string::npos) saw_other_k0 = true;
  }
  CHECK_FALSE(saw_hidden_k0);
  CHECK(saw_hidden_k1);
  CHECK(saw_other_k0);

  // Agents without a connecting channel violate the hidden-channel premise.
  CHECK_THROWS_AS(eavesdropper_view(rec, 1, 99, 20), std::invalid_argument);
  CHECK_THROWS_AS(eavesdropper_view(rec, 2, 5, 20), std::invalid_argument);
}

TEST_CASE("eavesdropper audit passes across the ladder") {
  RunRecord rec = audited_run(201);
  std::mt19937_64 rng(14);
  for (double mag : {1.0, 1e2, 1e4, 1e6}) {
    AuditResult audit = verify_eavesdropper(rec, 1, 2, dvec(0.77 * mag), 200, 1e-9, rng);
    REQUIRE(audit.pass);
    REQUIRE(audit.max_deviation <= 1e-9);
  }
}

TEST_CASE("shadow preconditions") {
  RunRecord rec = audited_run(30);
  std::mt19937_64 rng(15);
  // Agent 3 is not a neighbor of agent 5.
  CHECK_THROWS_AS(make_shadow_spec(rec, 5, 3, dvec(1.0), rng), std::invalid_argument);
  // Forced case II needs the accomplice to be an in-neighbor; 4 is only an
  // out-neighbor of 1.
  CHECK_THROWS_AS(make_shadow_spec(rec, 1, 4, dvec(1.0), rng, ShadowCase::II),
                  std::invalid_argument);
  // The accomplice itself must stay uncorrupted.
  ShadowSpec spec = make_shadow_spec(rec, 1, 2, dvec(1.0), rng);
  CHECK_THROWS_AS(verify_indistinguishable(rec, spec, {2, 4}, 20, 1e-9), std::invalid_argument);
}
