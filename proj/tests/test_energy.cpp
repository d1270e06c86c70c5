#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "winofi/energy.hpp"

using namespace winofi;

namespace {
Model energy_model() { return generate_synthetic_model(42); }
Dataset energy_data(const Model& m, int n = 25) {
  Dataset d = generate_inputs(m, n, 7);
  self_label(m, d);
  return d;
}
}  // namespace

TEST_CASE("ber_at_voltage anchors, interpolation, range") {
  VoltageBerCurve curve = VoltageBerCurve::default_curve();
  for (auto& [v, b] : curve.anchors) CHECK(ber_at_voltage(curve, v) == b);

  VoltageBerCurve two{{{0.78, 1e-6}, {0.82, 1e-10}}};
  CHECK(ber_at_voltage(two, 0.80) == doctest::Approx(1e-8).epsilon(1e-9));

  CHECK_THROWS_AS(ber_at_voltage(curve, 0.5), Error);
  CHECK_THROWS_AS(ber_at_voltage(curve, 0.95), Error);

  double prev = 1.0;
  for (double v = curve.v_min(); v <= curve.v_max() + 1e-9; v += 0.001) {
    double b = ber_at_voltage(curve, std::min(v, curve.v_max()));
    CHECK(b <= prev + 1e-18);
    prev = b;
  }
}

TEST_CASE("curve validation") {
  VoltageBerCurve increasing{{{0.7, 1e-8}, {0.9, 1e-4}}};
  CHECK_THROWS_AS(increasing.validate(), Error);
  VoltageBerCurve single{{{0.8, 1e-6}}};
  CHECK_THROWS_AS(single.validate(), Error);
  VoltageBerCurve zero = VoltageBerCurve::zero_curve();
  zero.validate();
  CHECK(ber_at_voltage(zero, 0.8) == 0.0);
}

TEST_CASE("runtime model favors winograd") {
  Model m = energy_model();
  RuntimeModel rt;
  double st = rt.runtime_seconds(m.with_engines(ConvEngine::DIRECT));
  double wg = rt.runtime_seconds(m.with_engines(ConvEngine::WINOGRAD));
  CHECK(st > 0.0);
  CHECK(wg < st);
}

TEST_CASE("min_safe_voltage selection rules") {
  Model m = energy_model();
  Dataset d = energy_data(m);

  SUBCASE("zero curve picks the lowest grid voltage for any budget") {
    VoltageBerCurve curve = VoltageBerCurve::zero_curve();
    for (double budget : {0.01, 0.5, 1.0}) {
      VoltagePick pick =
          min_safe_voltage(m, d, TmrMode::ST_CONV, curve, budget, 0.05, 1, 3, 1);
      CHECK(pick.voltage == doctest::Approx(curve.v_min()));
    }
  }
  SUBCASE("budget 1.0 accepts anything, so the lowest voltage wins") {
    VoltageBerCurve curve = VoltageBerCurve::default_curve();
    VoltagePick pick = min_safe_voltage(m, d, TmrMode::ST_CONV, curve, 1.0, 0.05, 1, 3, 1);
    CHECK(pick.voltage == doctest::Approx(curve.v_min()));
  }
  SUBCASE("chosen voltage is non-increasing in the budget") {
    VoltageBerCurve curve = VoltageBerCurve::default_curve();
    auto table = voltage_accuracy_table(m.with_engines(ConvEngine::DIRECT), d, curve, 0.01,
                                        2, 3, 1);
    double prev_v = 1.0;
    for (double budget : {0.10, 0.20, 0.40, 0.80}) {
      VoltagePick pick = min_safe_voltage(table, 1.0, budget);
      CHECK(pick.voltage <= prev_v + 1e-12);
      prev_v = pick.voltage;
    }
  }
  SUBCASE("impossible budget raises INFEASIBLE_BUDGET") {
    std::vector<VoltageAccuracy> table(3);
    for (int i = 0; i < 3; ++i) {
      table[i].voltage = 0.7 + 0.1 * i;
      table[i].acc.accuracy = 0.5;
      table[i].acc.ci_lo = 0.4;
      table[i].acc.ci_hi = 0.6;
    }
    try {
      min_safe_voltage(table, 1.0, 0.01);
      FAIL("expected INFEASIBLE_BUDGET");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::INFEASIBLE_BUDGET);
    }
  }
}

TEST_CASE("energy report normalization and orderings") {
  Model m = energy_model();
  Dataset d = energy_data(m, 30);
  VoltageBerCurve curve = VoltageBerCurve::default_curve();
  PowerModel power;
  RuntimeModel rt;
  std::vector<double> budgets{0.1, 0.2};
  EnergyReport rep = energy_report(m, d, {TmrMode::ST_CONV, TmrMode::WG_WO_AFT, TmrMode::WG_W_AFT},
                                   budgets, curve, power, rt, 0.02, 2, 3, 1);
  CHECK(rep.baseline_energy == power.p0 * rt.runtime_seconds(m.with_engines(ConvEngine::DIRECT)));
  for (double budget : budgets) {
    const EnergyCell* st = rep.find(TmrMode::ST_CONV, budget);
    const EnergyCell* wo = rep.find(TmrMode::WG_WO_AFT, budget);
    const EnergyCell* w = rep.find(TmrMode::WG_W_AFT, budget);
    REQUIRE((st && wo && w));
    REQUIRE(st->feasible);
    CHECK(st->normalized <= 1.0 + 1e-12);
    // same gate voltage, smaller runtime
    CHECK(wo->pick.voltage == doctest::Approx(st->pick.voltage));
    CHECK(wo->energy < st->energy);
    // winograd-aware gate never needs more voltage than the direct gate
    CHECK(w->pick.voltage <= wo->pick.voltage + 1e-12);
    CHECK(w->energy <= wo->energy + 1e-15);
  }

  // doubling P0 rescales energies but not normalized values
  PowerModel doubled{2.0, 0.9};
  EnergyReport rep2 = energy_report(m, d, {TmrMode::ST_CONV}, budgets, curve, doubled, rt,
                                    0.02, 2, 3, 1);
  for (double budget : budgets) {
    CHECK(rep2.find(TmrMode::ST_CONV, budget)->normalized ==
          doctest::Approx(rep.find(TmrMode::ST_CONV, budget)->normalized));
  }
}
