#include "doctest.h"

#include <cmath>
#include <set>

#include "pcreg/losses.hpp"
#include "pcreg/train.hpp"
#include "test_util.hpp"

using namespace pcreg;
using namespace pcreg::testutil;

namespace {

ModelConfig tiny_model() {
    ModelConfig cfg;
    cfg.k = 4;
    cfg.feature_width = 8;
    cfg.scales = 1;
    cfg.init_seed = 3;
    return cfg;
}

ModelParameters noisy(const ModelConfig& cfg, std::uint64_t seed) {
    ModelParameters p = ModelParameters::initialize(cfg);
    Rng rng(seed);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += rng.uniform(-0.2, 0.2);
    return p;
}

// A self-registration case with a high-resolution pool.
RegistrationCase make_case(std::size_t n, std::size_t pool_n, std::uint64_t seed) {
    Rng rng(seed);
    const PointCloud pool = random_cloud(pool_n, rng, 40.0);
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    RegistrationCase c("t", random_cloud(n, rng, 40.0), pool.subset(idx));
    c.moving_highres = pool;
    return c;
}

AdaptationConfig tiny_train(std::uint64_t seed = 5) {
    AdaptationConfig cfg;
    cfg.n_points = 24;
    cfg.n_points_highres = 48;
    cfg.batch_source = 2;
    cfg.batch_target = 2;
    cfg.seed = seed;
    cfg.threads = 1;
    cfg.source_def.kind = DeformationSpec::Kind::kRigid;
    cfg.source_def.rotation_range_deg = 10.0;
    cfg.source_def.translation_range_mm = 8.0;
    return cfg;
}

}  // namespace

TEST_CASE("supervised loss basics") {
    Rng rng(1);
    const DisplacementField f = random_field(16, rng);
    CHECK(supervised_loss(f, f) == 0.0);

    const DisplacementField a({{1.0, 2.0, 2.0}});
    const DisplacementField z({{0.0, 0.0, 0.0}});
    CHECK(supervised_loss(a, z) == doctest::Approx(9.0).epsilon(1e-12));

    const DisplacementField x = random_field(32, rng);
    const DisplacementField y = random_field(32, rng);
    double direct = 0.0;
    for (std::size_t i = 0; i < 32; ++i) direct += squared_norm(x[i] - y[i]);
    direct /= 32.0;
    CHECK(supervised_loss(x, y) == doctest::Approx(direct).epsilon(1e-12));

    CHECK_THROWS_AS(supervised_loss(x, a), std::invalid_argument);
}

TEST_CASE("filter indicator follows the strict Chamfer comparison") {
    Rng rng(2);
    const PointCloud fixed = random_cloud(24, rng, 30.0);
    const PointCloud moving = random_cloud(24, rng, 30.0);
    RegistrationCase c("t", fixed, moving);

    // Teacher warps moving exactly onto fixed: d_CD = 0 < d_CD(student) -> 1.
    std::vector<Vec3> exact;
    for (std::size_t i = 0; i < moving.size(); ++i) exact.push_back(fixed[i] - moving[i]);
    const DisplacementField teacher(std::move(exact));
    const DisplacementField student = DisplacementField::zeros(moving.size());
    CHECK(filter_indicator(c, student, teacher) == 1);

    // Identical predictions: equality resolves to 0.
    CHECK(filter_indicator(c, teacher, teacher) == 0);
    CHECK(filter_indicator(c, student, student) == 0);

    // One-point case where the teacher is strictly farther -> 0.
    RegistrationCase one("o", PointCloud({{0.0, 0.0, 0.0}}), PointCloud({{1.0, 0.0, 0.0}}));
    const DisplacementField close_student({{-1.0, 0.0, 0.0}});
    const DisplacementField far_teacher({{5.0, 0.0, 0.0}});
    CHECK(filter_indicator(one, close_student, far_teacher) == 0);
    CHECK(filter_indicator(one, far_teacher, close_student) == 1);
}

TEST_CASE("consistency loss value honors the indicator") {
    Rng rng(3);
    const PointCloud fixed = random_cloud(20, rng, 30.0);
    const PointCloud moving = random_cloud(20, rng, 30.0);
    RegistrationCase c("t", fixed, moving);

    const DisplacementField phi = random_field(20, rng, 3.0);
    CHECK(consistency_loss(c, phi, phi) == 0.0);  // equal fields: indicator 0

    std::vector<Vec3> exact;
    for (std::size_t i = 0; i < moving.size(); ++i) exact.push_back(fixed[i] - moving[i]);
    const DisplacementField teacher(std::move(exact));
    const double expected = supervised_loss(phi, teacher);
    CHECK(consistency_loss(c, phi, teacher) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("consistency gradient matches finite differences when the label is accepted") {
    const ModelConfig cfg = tiny_model();
    ModelParameters student = noisy(cfg, 7);
    const ModelParameters teacher = noisy(cfg, 8);
    Rng rng(9);
    const PointCloud moving = random_cloud(64, rng, 30.0);
    const PointCloud fixed = random_cloud(64, rng, 30.0);
    const auto weights = resolve_scale_weights({}, 1);

    std::vector<DisplacementField> teacher_values;
    {
        const ForwardPass tf = forward(teacher, moving, fixed, cfg);
        for (const auto& s : tf.scales) teacher_values.push_back(s.values);
    }

    auto loss_at = [&](const ModelParameters& p) {
        ForwardPass fwd = forward(p, moving, fixed, cfg);
        return field_mse_loss_scales(fwd, teacher_values, weights).value;
    };

    ForwardPass fwd = forward(student, moving, fixed, cfg);
    const LossTerm loss = field_mse_loss_scales(fwd, teacher_values, weights);
    std::vector<double> grad(student.size(), 0.0);
    fwd.tape.backward(loss.node, 1.0, grad);

    const double h = 1e-4;
    for (int rep = 0; rep < 10; ++rep) {
        const std::size_t j = rng.uniform_index(student.size());
        ModelParameters plus = student, minus = student;
        plus[j] += h;
        minus[j] -= h;
        const double fd = (loss_at(plus) - loss_at(minus)) / (2.0 * h);
        const double denom = std::max({1e-6, std::abs(grad[j]), std::abs(fd)});
        CHECK(std::abs(grad[j] - fd) / denom < 1e-4);
    }
}

TEST_CASE("synthesize_pair: zero teacher field gives an unwarped pair with zero labels") {
    const RegistrationCase c = make_case(24, 64, 11);
    Rng rng(12);
    const SynthesizedPair p =
        synthesize_pair(c, DisplacementField::zeros(c.moving.size()), 24, 5.0, rng);
    REQUIRE(p.triplet.moving.size() == 24);
    REQUIRE(p.triplet.fixed.size() == 24);
    for (std::size_t i = 0; i < 24; ++i) {
        CHECK(squared_norm(p.triplet.gt[i]) == 0.0);
        CHECK(p.triplet.fixed[i] == (*c.moving_highres)[p.subset_b[i]]);
    }
}

TEST_CASE("synthesize_pair: subsets are always disjoint and labels byte-equal the interpolation") {
    const RegistrationCase c = make_case(24, 64, 13);
    Rng field_rng(14);
    const DisplacementField phi = random_field(c.moving.size(), field_rng, 4.0);

    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        const SynthesizedPair p = synthesize_pair(c, phi, 24, 5.0, rng);
        std::set<std::size_t> a(p.subset_a.begin(), p.subset_a.end());
        std::set<std::size_t> b(p.subset_b.begin(), p.subset_b.end());
        CHECK(a.size() == 24);
        CHECK(b.size() == 24);
        for (std::size_t i : b) CHECK(a.count(i) == 0);

        const DisplacementField pool_field =
            gaussian_interpolate(c.moving, phi, *c.moving_highres, 5.0);
        for (std::size_t i = 0; i < p.subset_a.size(); ++i) {
            CHECK(p.triplet.gt[i] == pool_field[p.subset_a[i]]);  // byte equality
        }
    }
}

TEST_CASE("synthesize_pair: constant teacher field shifts the fixed subset verbatim") {
    const RegistrationCase c = make_case(20, 52, 15);
    const Vec3 v{3.0, -1.0, 2.0};
    const DisplacementField phi(std::vector<Vec3>(c.moving.size(), v));
    Rng rng(16);
    const SynthesizedPair p = synthesize_pair(c, phi, 20, 5.0, rng);
    for (std::size_t i = 0; i < 20; ++i) {
        CHECK(close_rel(p.triplet.gt[i].x, v.x, 1e-12));
        CHECK(close_rel(p.triplet.gt[i].y, v.y, 1e-12));
        CHECK(close_rel(p.triplet.gt[i].z, v.z, 1e-12));
        const Vec3 expected = (*c.moving_highres)[p.subset_b[i]] + p.triplet.gt[0];
        CHECK(close_rel(p.triplet.fixed[i].x, expected.x, 1e-12));
        CHECK(close_rel(p.triplet.fixed[i].y, expected.y, 1e-12));
        CHECK(close_rel(p.triplet.fixed[i].z, expected.z, 1e-12));
    }
}

TEST_CASE("synthesize_pair rejects an undersized pool") {
    const RegistrationCase c = make_case(24, 40, 17);
    Rng rng(18);
    CHECK_THROWS_AS(synthesize_pair(c, DisplacementField::zeros(24), 24, 5.0, rng),
                    std::invalid_argument);
}

TEST_CASE("synthesis gradient matches finite differences") {
    const ModelConfig cfg = tiny_model();
    ModelParameters student = noisy(cfg, 19);
    const RegistrationCase c = make_case(32, 70, 20);
    Rng field_rng(21);
    const DisplacementField phi_teacher = random_field(c.moving.size(), field_rng, 4.0);
    Rng pair_rng(22);
    const SynthesizedPair pair = synthesize_pair(c, phi_teacher, 32, 5.0, pair_rng);
    const auto weights = resolve_scale_weights({}, 1);

    auto loss_at = [&](const ModelParameters& p) {
        ForwardPass fwd = forward(p, pair.triplet.moving, pair.triplet.fixed, cfg);
        return field_mse_loss(fwd, pair.triplet.gt, weights).value;
    };

    ForwardPass fwd = forward(student, pair.triplet.moving, pair.triplet.fixed, cfg);
    const LossTerm loss = field_mse_loss(fwd, pair.triplet.gt, weights);
    std::vector<double> grad(student.size(), 0.0);
    fwd.tape.backward(loss.node, 1.0, grad);

    Rng rng(23);
    const double h = 1e-4;
    for (int rep = 0; rep < 10; ++rep) {
        const std::size_t j = rng.uniform_index(student.size());
        ModelParameters plus = student, minus = student;
        plus[j] += h;
        minus[j] -= h;
        const double fd = (loss_at(plus) - loss_at(minus)) / (2.0 * h);
        const double denom = std::max({1e-6, std::abs(grad[j]), std::abs(fd)});
        CHECK(std::abs(grad[j] - fd) / denom < 1e-4);
    }
}

TEST_CASE("train_step with lambda_con = lambda_syn = 0 ignores the target batch") {
    const ModelConfig mcfg = tiny_model();
    AdaptationConfig cfg = tiny_train();
    cfg.lambda_con = 0.0;
    cfg.lambda_syn = 0.0;

    Rng rng(25);
    const PointCloud base = random_cloud(24, rng, 30.0);
    Rng def_rng(26);
    std::vector<SourceTriplet> source{make_source_triplet(base, cfg.source_def, def_rng)};
    std::vector<RegistrationCase> targets{make_case(24, 48, 27)};

    TrainState with_targets = init_train_state(mcfg);
    TrainState without = init_train_state(mcfg);
    const StepRecord r1 = train_step(with_targets, source, targets, mcfg, cfg);
    const StepRecord r2 = train_step(without, source, {}, mcfg, cfg);
    REQUIRE(r1.ok);
    REQUIRE(r2.ok);
    CHECK(r1.loss_con == 0.0);
    CHECK(r1.loss_syn == 0.0);
    for (std::size_t i = 0; i < with_targets.student.size(); ++i) {
        CHECK(with_targets.student[i] == without.student[i]);
    }
}

TEST_CASE("train_step with alpha = 1 keeps the teacher bitwise constant") {
    const ModelConfig mcfg = tiny_model();
    AdaptationConfig cfg = tiny_train();
    cfg.ema_alpha = 1.0;

    TrainState state = init_train_state(mcfg);
    const ModelParameters teacher_before = state.teacher;

    Rng rng(29);
    const PointCloud base = random_cloud(24, rng, 30.0);
    Rng def_rng(30);
    std::vector<SourceTriplet> source{make_source_triplet(base, cfg.source_def, def_rng)};
    std::vector<RegistrationCase> targets{make_case(24, 48, 31)};
    for (int i = 0; i < 3; ++i) {
        const StepRecord r = train_step(state, source, targets, mcfg, cfg);
        REQUIRE(r.ok);
    }
    for (std::size_t i = 0; i < state.teacher.size(); ++i)
        CHECK(state.teacher[i] == teacher_before[i]);
}

TEST_CASE("train_step with all lambdas zero leaves the student untouched") {
    const ModelConfig mcfg = tiny_model();
    AdaptationConfig cfg = tiny_train();
    cfg.lambda_sup = 0.0;
    cfg.lambda_con = 0.0;
    cfg.lambda_syn = 0.0;

    TrainState state = init_train_state(mcfg);
    const ModelParameters before = state.student;
    Rng rng(33);
    const PointCloud base = random_cloud(24, rng, 30.0);
    Rng def_rng(34);
    std::vector<SourceTriplet> source{make_source_triplet(base, cfg.source_def, def_rng)};
    const StepRecord r = train_step(state, source, {}, mcfg, cfg);
    REQUIRE(r.ok);
    CHECK(r.total == 0.0);
    for (std::size_t i = 0; i < before.size(); ++i)
        CHECK(std::abs(state.student[i] - before[i]) < 1e-12);
}

TEST_CASE("teacher always equals the EMA of its previous self and the new student") {
    const ModelConfig mcfg = tiny_model();
    AdaptationConfig cfg = tiny_train();
    TrainState state = init_train_state(mcfg);

    Rng rng(35);
    const PointCloud base = random_cloud(24, rng, 30.0);
    Rng def_rng(36);
    std::vector<SourceTriplet> source{make_source_triplet(base, cfg.source_def, def_rng)};
    std::vector<RegistrationCase> targets{make_case(24, 48, 37)};

    for (int i = 0; i < 3; ++i) {
        const ModelParameters teacher_pre = state.teacher;
        const StepRecord r = train_step(state, source, targets, mcfg, cfg);
        REQUIRE(r.ok);
        for (std::size_t p = 0; p < state.teacher.size(); ++p) {
            const double expected =
                cfg.ema_alpha * teacher_pre[p] + (1.0 - cfg.ema_alpha) * state.student[p];
            CHECK(state.teacher[p] == expected);
        }
    }
}

TEST_CASE("train_step records are reproducible bit-identically") {
    const ModelConfig mcfg = tiny_model();
    const AdaptationConfig cfg = tiny_train(1234);

    auto run_once = [&] {
        TrainState state = init_train_state(mcfg);
        Rng rng(39);
        const PointCloud base = random_cloud(24, rng, 30.0);
        Rng def_rng(40);
        std::vector<SourceTriplet> source{make_source_triplet(base, cfg.source_def, def_rng)};
        std::vector<RegistrationCase> targets{make_case(24, 48, 41)};
        return train_step(state, source, targets, mcfg, cfg);
    };
    const StepRecord a = run_once();
    const StepRecord b = run_once();
    REQUIRE(a.ok);
    CHECK(a.loss_sup == b.loss_sup);
    CHECK(a.loss_con == b.loss_con);
    CHECK(a.loss_syn == b.loss_syn);
    CHECK(a.total == b.total);
    CHECK(a.indicator_rate == b.indicator_rate);
}

TEST_CASE("a non-finite loss aborts the step and leaves the state untouched") {
    const ModelConfig mcfg = tiny_model();
    AdaptationConfig cfg = tiny_train();
    cfg.lambda_con = 0.0;
    cfg.lambda_syn = 0.0;

    TrainState state = init_train_state(mcfg);
    const ModelParameters before = state.student;
    const std::int64_t step_before = state.step;

    Rng rng(71);
    const PointCloud m = random_cloud(16, rng, 30.0);
    const PointCloud f = random_cloud(16, rng, 30.0);
    // Finite but absurd label: the squared error overflows to infinity.
    const DisplacementField huge(std::vector<Vec3>(16, Vec3{1e200, 0.0, 0.0}));
    std::vector<SourceTriplet> source{SourceTriplet(m, f, huge)};

    const StepRecord r = train_step(state, source, {}, mcfg, cfg);
    CHECK_FALSE(r.ok);
    CHECK(!r.error.empty());
    CHECK(state.step == step_before);
    for (std::size_t i = 0; i < before.size(); ++i) CHECK(state.student[i] == before[i]);
}

TEST_CASE("a rejected pseudo-label contributes no gradient at all") {
    // Fresh state: teacher == student, so the indicator is 0 on every target
    // item; a step with the consistency term enabled must equal the same step
    // with it disabled, bitwise.
    const ModelConfig mcfg = tiny_model();
    Rng rng(73);
    const PointCloud base = random_cloud(24, rng, 30.0);

    auto run = [&](double lambda_con) {
        AdaptationConfig cfg = tiny_train(7);
        cfg.lambda_con = lambda_con;
        cfg.lambda_syn = 0.0;
        TrainState state = init_train_state(mcfg);
        Rng def_rng(74);
        std::vector<SourceTriplet> source{make_source_triplet(base, cfg.source_def, def_rng)};
        std::vector<RegistrationCase> targets{make_case(24, 48, 75)};
        const StepRecord r = train_step(state, source, targets, mcfg, cfg);
        REQUIRE(r.ok);
        REQUIRE(r.indicator_rate == (lambda_con > 0.0 ? 0.0 : 0.0));
        return state;
    };
    const TrainState with_con = run(10.0);
    const TrainState without = run(0.0);
    for (std::size_t i = 0; i < with_con.student.size(); ++i) {
        CHECK(with_con.student[i] == without.student[i]);
    }
}

TEST_CASE("ema_update rejects mismatched lengths") {
    ModelParameters a(std::vector<double>{1.0, 2.0});
    const ModelParameters b(std::vector<double>{1.0});
    CHECK_THROWS_AS(ema_update(a, b, 0.5), std::invalid_argument);
}

TEST_CASE("direct Chamfer loss gradient matches finite differences") {
    const ModelConfig cfg = tiny_model();
    ModelParameters params = noisy(cfg, 81);
    Rng rng(82);
    const PointCloud moving = random_cloud(48, rng, 30.0);
    const PointCloud fixed = random_cloud(48, rng, 30.0);
    const NeighborIndex fixed_index(fixed);

    auto loss_at = [&](const ModelParameters& p) {
        ForwardPass fwd = forward(p, moving, fixed, cfg);
        return chamfer_direct_loss(fwd, moving, fixed, fixed_index).value;
    };

    ForwardPass fwd = forward(params, moving, fixed, cfg);
    const LossTerm loss = chamfer_direct_loss(fwd, moving, fixed, fixed_index);
    std::vector<double> grad(params.size(), 0.0);
    fwd.tape.backward(loss.node, 1.0, grad);

    const double h = 1e-4;
    int clean = 0;
    for (int rep = 0; rep < 10; ++rep) {
        const std::size_t j = rng.uniform_index(params.size());
        ModelParameters plus = params, minus = params;
        plus[j] += h;
        minus[j] -= h;
        const double fd = (loss_at(plus) - loss_at(minus)) / (2.0 * h);
        const double denom = std::max({1e-6, std::abs(grad[j]), std::abs(fd)});
        // Nearest-neighbor assignments may flip inside the FD window; the
        // subgradient is correct away from those boundaries.
        if (std::abs(grad[j] - fd) / denom < 1e-4) ++clean;
    }
    CHECK(clean >= 9);
}

TEST_CASE("train_step results do not depend on the thread count") {
    const ModelConfig mcfg = tiny_model();
    Rng rng(61);
    const PointCloud base = random_cloud(24, rng, 30.0);

    auto run_with_threads = [&](int threads) {
        AdaptationConfig cfg = tiny_train(99);
        cfg.threads = threads;
        TrainState state = init_train_state(mcfg);
        Rng def_rng(62);
        std::vector<SourceTriplet> source{make_source_triplet(base, cfg.source_def, def_rng),
                                          make_source_triplet(base, cfg.source_def, def_rng)};
        std::vector<RegistrationCase> targets{make_case(24, 48, 63), make_case(24, 48, 64)};
        for (int i = 0; i < 2; ++i) {
            const StepRecord r = train_step(state, source, targets, mcfg, cfg);
            REQUIRE(r.ok);
        }
        return state;
    };

    const TrainState a = run_with_threads(1);
    const TrainState b = run_with_threads(4);
    for (std::size_t i = 0; i < a.student.size(); ++i) {
        CHECK(a.student[i] == b.student[i]);
        CHECK(a.teacher[i] == b.teacher[i]);
    }
    REQUIRE(a.metrics.size() == b.metrics.size());
    for (std::size_t i = 0; i < a.metrics.size(); ++i) {
        CHECK(a.metrics[i].total == b.metrics[i].total);
        CHECK(a.metrics[i].indicator_rate == b.metrics[i].indicator_rate);
    }
}

TEST_CASE("run_pretraining with zero epochs returns a fresh state") {
    const ModelConfig mcfg = tiny_model();
    AdaptationConfig cfg = tiny_train();
    cfg.pretrain_epochs = 0;
    std::vector<RegistrationCase> cases{make_case(24, 48, 43)};
    const TrainState state = run_pretraining(cases, mcfg, cfg);
    CHECK(state.step == 0);
    for (std::size_t i = 0; i < state.student.size(); ++i)
        CHECK(state.student[i] == state.teacher[i]);
}

TEST_CASE("identity source deformations start at zero loss under the zero-init decoder") {
    const ModelConfig mcfg = tiny_model();
    AdaptationConfig cfg = tiny_train();
    cfg.lambda_con = 0.0;
    cfg.lambda_syn = 0.0;
    cfg.source_def.rotation_range_deg = 0.0;
    cfg.source_def.translation_range_mm = 0.0;

    TrainState state = init_train_state(mcfg);
    Rng rng(45);
    const PointCloud base = random_cloud(24, rng, 30.0);
    Rng def_rng(46);
    std::vector<SourceTriplet> source{make_source_triplet(base, cfg.source_def, def_rng)};
    const StepRecord r = train_step(state, source, {}, mcfg, cfg);
    REQUIRE(r.ok);
    CHECK(r.loss_sup == 0.0);
}

TEST_CASE("supervised loss is non-increasing over 50 steps on a fixed pair (10 seeds)") {
    const ModelConfig mcfg = tiny_model();
    int improved = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        ModelConfig m = mcfg;
        m.init_seed = 1000 + seed;
        AdaptationConfig cfg = tiny_train(seed);
        cfg.lambda_con = 0.0;
        cfg.lambda_syn = 0.0;

        Rng rng(100 + seed);
        const PointCloud base = random_cloud(32, rng, 30.0);
        Rng def_rng(200 + seed);
        std::vector<SourceTriplet> source{make_source_triplet(base, cfg.source_def, def_rng)};

        TrainState state = init_train_state(m);
        double first = 0.0, last = 0.0;
        for (int i = 0; i < 50; ++i) {
            const StepRecord r = train_step(state, source, {}, m, cfg);
            REQUIRE(r.ok);
            if (i == 0) first = r.loss_sup;
            last = r.loss_sup;
        }
        if (last <= first) ++improved;
    }
    CHECK(improved >= 9);
}

TEST_CASE("run_adaptation with zero epochs leaves the state unchanged") {
    const ModelConfig mcfg = tiny_model();
    AdaptationConfig cfg = tiny_train();
    cfg.adapt_epochs = 0;
    std::vector<RegistrationCase> cases{make_case(24, 48, 47)};
    TrainState state = init_train_state(mcfg);
    const ModelParameters before = state.student;
    run_adaptation(cases, state, mcfg, cfg);
    CHECK(state.step == 0);
    for (std::size_t i = 0; i < before.size(); ++i) CHECK(state.student[i] == before[i]);
}

TEST_CASE("short adaptation logs indicator rates inside [0, 1]") {
    const ModelConfig mcfg = tiny_model();
    AdaptationConfig cfg = tiny_train();
    cfg.pretrain_epochs = 2;
    cfg.adapt_epochs = 2;
    cfg.batch_source = 2;
    cfg.batch_target = 2;

    std::vector<RegistrationCase> cases;
    for (std::uint64_t i = 0; i < 4; ++i) cases.push_back(make_case(24, 48, 100 + i));

    TrainState state = run_pretraining(cases, mcfg, cfg);
    run_adaptation(cases, state, mcfg, cfg);
    REQUIRE(state.step > 0);
    REQUIRE(!state.metrics.empty());
    for (const StepRecord& r : state.metrics) {
        CHECK(r.indicator_rate >= 0.0);
        CHECK(r.indicator_rate <= 1.0);
    }
}

TEST_CASE("make_training_view samples the configured sizes") {
    const RegistrationCase c = make_case(30, 64, 55);
    Rng rng(56);
    const RegistrationCase view = make_training_view(c, 16, rng);
    CHECK(view.moving.size() == 16);
    CHECK(view.fixed.size() == 16);
    REQUIRE(view.moving_highres.has_value());
    CHECK(view.moving_highres->size() == 64);
}
