// Acceptance suite: prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "e2eg/baselines.hpp"
#include "e2eg/experiment.hpp"
#include "e2eg/metrics.hpp"
#include "support.hpp"

using namespace e2eg;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and settings.
constexpr double kGradTolerance = 1e-4;
constexpr double kGradStep = 1e-3;
constexpr double kGradBudgetSeconds = 60.0;
constexpr double kAblationBudgetSeconds = 600.0;
constexpr double kMultiTaskMarginPoints = 3.0;
constexpr double kTwoStageSlackPoints = 1.0;
constexpr double kNoHarmPoints = 2.0;
constexpr std::uint64_t kSeeds[] = {0, 1, 2, 3, 4};

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), format, args...);
    return buf;
}

bool bytes_equal(std::span<const double> a, std::span<const double> b) {
    return a.size() == b.size() && (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

bool encoder_bytes_equal(const EncoderState& a, const EncoderState& b) {
    return bytes_equal(a.embedding.data, b.embedding.data) && bytes_equal(a.w1.data, b.w1.data) &&
           bytes_equal(a.b1, b.b1);
}

bool grads_bytes_equal(const ModelGrads& a, const ModelGrads& b) {
    const auto va = gradient_views(a);
    const auto vb = gradient_views(b);
    for (std::size_t t = 0; t < va.size(); ++t)
        if (!bytes_equal(va[t], vb[t])) return false;
    return true;
}

bool all_zero(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

// Synthetic setting shared by the directional checks.
SynthSpec ablation_spec() {
    SynthSpec s;
    s.n = 600;
    s.num_classes = 4;
    s.p_in = 0.1;
    s.p_out = 0.005;
    s.text_ambiguity = 0.7;
    return s;
}

TrainConfig ablation_train() {
    TrainConfig t;
    t.lr_max = 0.01;
    t.depth = 4;
    t.branching = 2;
    t.epochs_per_round = 10;
    t.delay_rounds = 2;
    return t;
}

ExperimentConfig seed_experiment(const SynthSpec& spec, const TrainConfig& train, std::vector<ModelKind> kinds,
                                 std::uint64_t seed) {
    ExperimentConfig c;
    c.synth = spec;
    c.synth_seed = seed;
    c.split_seed = seed;
    c.split_ratios = {0.2, 0.2, 0.6};
    c.kinds = std::move(kinds);
    c.train = train;
    c.seeds = {seed};
    return c;
}

/// Per-kind test accuracies (percent), one per seed; each seed draws its own graph and split.
std::map<ModelKind, std::vector<double>> test_points(const SynthSpec& spec, const TrainConfig& train,
                                                     const std::vector<ModelKind>& kinds) {
    std::map<ModelKind, std::vector<double>> out;
    for (const auto seed : kSeeds) {
        const auto result = run_experiment(seed_experiment(spec, train, kinds, seed));
        for (const auto& row : result.table.rows) {
            if (!row.ok) throw std::runtime_error(std::string(to_string(row.kind)) + " failed: " + row.error);
            out[row.kind].push_back(100.0 * row.test_acc);
        }
    }
    return out;
}

std::string list_points(const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += fmt(i ? " %.1f" : "%.1f", v[i]);
    return s + "]";
}

Outcome gradient_check() {
    const auto start = std::chrono::steady_clock::now();
    auto spec = fixtures::small_spec(20, 3);
    const auto data = fixtures::prepared_synthetic(spec, 1);
    const auto hlt = build_hlt(data.tfidf, 2, 2, 1);
    double worst = 0.0;
    std::string tensor;
    std::size_t checked = 0;
    for (int d = 1; d <= 2; ++d) {
        const auto set = fixtures::all_node_samples(data, hlt, d);
        const auto state = fixtures::small_model(data, hlt, d, 10 + static_cast<std::uint64_t>(d));
        const LossWeights w{0.7, 2.0, static_cast<double>(set.samples.size())};
        const auto r = fixtures::finite_difference_check(state, set.samples, w, kGradStep);
        checked += r.checked;
        if (r.max_rel_error > worst) {
            worst = r.max_rel_error;
            tensor = r.worst_tensor;
        }
    }
    const double secs = seconds_since(start);
    return {worst < kGradTolerance && secs < kGradBudgetSeconds,
            fmt("max rel error %.2e over %zu params (worst %s), tol %.0e, %.1fs", worst, checked,
                tensor.empty() ? "-" : tensor.c_str(), kGradTolerance, secs)};
}

Outcome hlt_invariants() {
    std::size_t failures = 0;
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
        Rng rng(derive_seed(123, trial));
        const std::size_t n = 8 + rng.below(93);
        std::vector<TokenSeq> docs(n);
        for (auto& doc : docs) {
            const auto len = 1 + rng.below(8);
            for (std::uint64_t k = 0; k < len; ++k) doc.push_back("w" + std::to_string(rng.below(40)));
        }
        const auto f = tfidf(docs, build_vocab(docs, 1, 1000));
        int depth = 1;
        while ((std::size_t{1} << (depth + 1)) <= n && depth < 5) ++depth;
        const auto hlt = build_hlt(f, 2, depth, trial);
        if (!(hlt == build_hlt(f, 2, depth, trial))) ++failures;
        for (int d = 1; d <= depth; ++d) {
            const auto a = hlt.assignment(d);
            std::vector<std::size_t> sizes(hlt.num_clusters(d), 0);
            for (const auto c : a) ++sizes[c];
            for (const auto s : sizes)
                if (s == 0) ++failures;
            for (std::size_t c = 0; c + 1 < sizes.size(); c += 2)
                if (std::max(sizes[c], sizes[c + 1]) - std::min(sizes[c], sizes[c + 1]) > 1) ++failures;
            if (d == 1) continue;
            const auto up = hlt.assignment(d - 1);
            for (NodeId i = 0; i < n; ++i)
                if (hlt.parent(a[i]) != up[i]) ++failures;
        }
    }
    return {failures == 0, fmt("20 trees, %zu violations", failures)};
}

Outcome projection_oracle() {
    std::size_t mismatches = 0, monotone = 0;
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
        const std::size_t n = 50;
        const auto g = fixtures::graph_from_edges(n, fixtures::random_edges(n, 0.06, derive_seed(5, trial)));
        const auto hlt = build_hlt(fixtures::random_features(n, 15, trial), 2, 4, trial);
        for (int d = 1; d <= 4; ++d) {
            const auto t = project_targets(g.adjacency(), hlt, d);
            const auto brute = fixtures::brute_targets(g.adjacency(), hlt, d);
            for (NodeId i = 0; i < n; ++i)
                for (std::size_t c = 0; c < t.num_labels(); ++c)
                    if ((t.bits.at(i, c) != 0.0) != (brute[i][c] != 0)) ++mismatches;
            if (d == 1) continue;
            const auto parent = project_targets(g.adjacency(), hlt, d - 1);
            for (NodeId i = 0; i < n; ++i)
                for (const auto c : t.row(i).indices)
                    if (parent.bits.at(i, hlt.parent(c)) == 0.0) ++monotone;
        }
    }
    return {mismatches == 0 && monotone == 0,
            fmt("20 graphs x 4 depths, %zu oracle mismatches, %zu monotonicity violations", mismatches, monotone)};
}

Outcome no_leakage() {
    const auto data = fixtures::prepared_synthetic(fixtures::small_spec(60, 3), 2);
    const auto hlt = build_hlt(data.tfidf, 2, 2, 2);
    const auto targets = project_targets(data.graph.adjacency(), hlt, 2);
    const auto state = fixtures::small_model(data, hlt, 2, 2);
    TrainConfig c;
    c.depth = 2;
    const LossMasker masker(data.graph, c);
    const LossWeights w{1.0, 1.0, 32.0};
    std::vector<NodeId> all, train_only, heldout;
    for (NodeId i = 0; i < data.size(); ++i) {
        all.push_back(i);
        (data.graph.split(i) == Split::train ? train_only : heldout).push_back(i);
    }

    // Per-node audit: classification head and main-path gradients are exactly zero.
    std::size_t nonzero = 0;
    reset_label_reads();
    const auto held_samples = build_samples(data, &targets, masker, 2, heldout);
    const auto reads = label_reads();
    for (const auto& s : held_samples) {
        auto g = ModelGrads::zeros_like(state);
        composite_batch(state, std::span(&s, 1), w, nullptr, &g);
        if (!all_zero(g.w_cls.data) || !all_zero(g.b_cls)) ++nonzero;
        auto main_only = s;
        main_only.use_nbr = false;
        auto gm = ModelGrads::zeros_like(state);
        composite_batch(state, std::span(&main_only, 1), w, nullptr, &gm);
        for (const auto v : gradient_views(gm))
            if (!all_zero(v)) ++nonzero;
    }

    // Batch removal: classifier and main-path gradients bitwise unchanged.
    const auto with = build_samples(data, &targets, masker, 2, all);
    const auto without = build_samples(data, &targets, masker, 2, train_only);
    auto gw = ModelGrads::zeros_like(state), gwo = ModelGrads::zeros_like(state);
    composite_batch(state, with, w, nullptr, &gw);
    composite_batch(state, without, w, nullptr, &gwo);
    const bool head_same = bytes_equal(gw.w_cls.data, gwo.w_cls.data) && bytes_equal(gw.b_cls, gwo.b_cls);
    auto strip = [](std::vector<Sample> v) {
        for (auto& s : v) s.use_nbr = false;
        return v;
    };
    auto mw = ModelGrads::zeros_like(state), mwo = ModelGrads::zeros_like(state);
    composite_batch(state, strip(with), w, nullptr, &mw);
    composite_batch(state, strip(without), w, nullptr, &mwo);
    const bool main_same = grads_bytes_equal(mw, mwo);
    return {nonzero == 0 && reads == 0 && head_same && main_same,
            fmt("%zu valid/test nodes audited: %zu nonzero tensors, %zu label reads; removal leaves head %s, "
                "main path %s",
                heldout.size(), nonzero, reads, head_same ? "identical" : "changed",
                main_same ? "identical" : "changed")};
}

Outcome strategy_invariants() {
    const auto data = fixtures::prepared_synthetic(fixtures::small_spec(80, 3), 3);
    const auto hlt = build_hlt(data.tfidf, 2, 3, 3);
    TrainConfig c;
    c.lr_max = 0.01;
    c.batch_size = 16;
    c.depth = 3;
    c.delay_rounds = 2;
    c.epochs_per_round = 2;
    c.embed_dim = 8;
    c.hidden_dim = 8;
    c.extra_max_epochs = 10;
    c.seed = 3;

    // Delay: replay the curriculum and inspect the classifier after every round.
    bool delay_ok = true;
    auto state = init_model({data.vocab.size(), c.embed_dim, c.hidden_dim, 3, c.dropout}, c.seed);
    const auto init_heads = state.heads;
    for (int d = 1; d <= c.depth; ++d) {
        state = init_round_heads(state, hlt, d, c.warm_start, derive_seed(c.seed, 601));
        state = train_round(state, data, project_targets(data.graph.adjacency(), hlt, d), c, d).state;
        const bool same = bytes_equal(state.heads.w_cls.data, init_heads.w_cls.data) &&
                          bytes_equal(state.heads.b_cls, init_heads.b_cls);
        if (d <= c.delay_rounds && !same) delay_ok = false;
        if (d > c.delay_rounds && same) delay_ok = false;
    }
    c.extra_round = true;
    const auto run = run_curriculum(data, hlt, c);
    delay_ok = delay_ok && run.curriculum_end == state;

    const auto extra = extra_round(run.curriculum_end, data, c);
    const bool freeze_ok = encoder_bytes_equal(extra.state.encoder, run.curriculum_end.encoder) &&
                           extra.best && encoder_bytes_equal(extra.best->encoder, run.curriculum_end.encoder);

    std::size_t lr_mismatch = 0;
    for (const auto& s : run.history.steps)
        if (s.lr != lr_at(s.step, s.total_steps, c.lr_max)) ++lr_mismatch;
    bool lr_restart = true;
    for (std::size_t k = 0; k < run.history.steps.size(); ++k)
        if (run.history.steps[k].step == 0 && run.history.steps[k].lr != c.lr_max) lr_restart = false;

    return {delay_ok && freeze_ok && lr_mismatch == 0 && lr_restart,
            fmt("delay k=2 head frozen in rounds 1..2: %s; extra round encoder bytes: %s; "
                "lr trace %zu/%zu steps off formula",
                delay_ok ? "yes" : "no", freeze_ok ? "identical" : "changed", lr_mismatch,
                run.history.steps.size())};
}

struct AblationRuns {
    std::map<ModelKind, std::vector<double>> points;
    double seconds = 0.0;
};

AblationRuns& ablation_a() {
    static AblationRuns runs = [] {
        const auto start = std::chrono::steady_clock::now();
        AblationRuns r;
        r.points = test_points(ablation_spec(), ablation_train(),
                               {ModelKind::e2eg, ModelKind::text_only, ModelKind::two_stage});
        r.seconds = seconds_since(start);
        return r;
    }();
    return runs;
}

Outcome multitask_helps() {
    const auto& r = ablation_a();
    const double e = median(r.points.at(ModelKind::e2eg));
    const double t = median(r.points.at(ModelKind::text_only));
    return {e >= t + kMultiTaskMarginPoints && r.seconds < kAblationBudgetSeconds,
            fmt("median test acc e2eg %.2f %s vs text_only %.2f %s, margin %.2f (need >= %.1f), %.1fs", e,
                list_points(r.points.at(ModelKind::e2eg)).c_str(), t,
                list_points(r.points.at(ModelKind::text_only)).c_str(), e - t, kMultiTaskMarginPoints, r.seconds)};
}

Outcome end_to_end_vs_two_stage() {
    const auto& r = ablation_a();
    const double e = median(r.points.at(ModelKind::e2eg));
    const double s = median(r.points.at(ModelKind::two_stage));
    return {e >= s - kTwoStageSlackPoints,
            fmt("report row: e2eg %.2f vs two_stage %.2f %s, delta %+.2f (need >= -%.1f)", e, s,
                list_points(r.points.at(ModelKind::two_stage)).c_str(), e - s, kTwoStageSlackPoints)};
}

Outcome no_harm() {
    auto spec = ablation_spec();
    spec.text_ambiguity = 0.0;
    spec.p_in = 0.03;
    spec.p_out = 0.03;
    const auto points = test_points(spec, ablation_train(), {ModelKind::e2eg, ModelKind::text_only});
    const double e = median(points.at(ModelKind::e2eg));
    const double t = median(points.at(ModelKind::text_only));
    return {std::abs(e - t) <= kNoHarmPoints,
            fmt("p_in = p_out = 0.03, ambiguity 0: e2eg %.2f %s vs text_only %.2f %s, |delta| %.2f (need <= %.1f)", e,
                list_points(points.at(ModelKind::e2eg)).c_str(), t, list_points(points.at(ModelKind::text_only)).c_str(),
                std::abs(e - t), kNoHarmPoints)};
}

Outcome extra_round_direction() {
    auto train = ablation_train();
    train.extra_round = true;
    std::vector<double> before, after;
    for (const auto seed : kSeeds) {
        const auto cfg = seed_experiment(ablation_spec(), train, {ModelKind::e2eg}, seed);
        const auto data = load_experiment_data(cfg);
        auto tc = train;
        tc.seed = seed;
        const auto run = train_kind(ModelKind::e2eg, data, tc);
        before.push_back(100.0 * run.val_before_extra);
        after.push_back(100.0 * run.val_after_extra);
    }
    const double b = median(before), a = median(after);
    return {a >= b, fmt("median valid acc before %.2f %s, after %.2f %s", b, list_points(before).c_str(), a,
                        list_points(after).c_str())};
}

Outcome cli_determinism() {
    const auto dir = fs::temp_directory_path() / "e2eg_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto cfg = dir / "exp.cfg";
    {
        std::ofstream out(cfg);
        out << "synth_n = 200\nkinds = e2eg,text_only,degree_mlp,two_stage\nseeds = 0,1\n"
               "lr_max = 0.01\ndepth = 3\nepochs_per_round = 3\ndelay_rounds = 1\nextra_round = true\n";
    }
    std::string csv[2];
    for (int k = 0; k < 2; ++k) {
        const auto out_dir = dir / ("run" + std::to_string(k));
        const std::string cmd = std::string(E2EG_CLI_PATH) + " --config " + cfg.string() + " --out-dir " +
                                out_dir.string() + " run > " + (dir / "stdout.txt").string() + " 2>&1";
        if (std::system(cmd.c_str()) != 0) return {false, "cli run exited nonzero"};
        std::ifstream in(out_dir / "results.csv", std::ios::binary);
        std::stringstream buf;
        buf << in.rdbuf();
        csv[k] = buf.str();
    }
    fs::remove_all(dir);
    const bool same = !csv[0].empty() && csv[0] == csv[1];
    return {same, fmt("two runs, results.csv %zu bytes, %s", csv[0].size(), same ? "byte-identical" : "different")};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"gradient correctness", gradient_check},
        {"label tree invariants", hlt_invariants},
        {"target projection oracle", projection_oracle},
        {"transductive no-leakage", no_leakage},
        {"strategy invariants", strategy_invariants},
        {"multi-task beats text-only", multitask_helps},
        {"end-to-end vs two-stage", end_to_end_vs_two_stage},
        {"no harm when text suffices", no_harm},
        {"extra round direction", extra_round_direction},
        {"cli determinism", cli_determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s [%zu] %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
