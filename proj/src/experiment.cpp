#include "e2eg/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "e2eg/baselines.hpp"
#include "e2eg/errors.hpp"
#include "e2eg/hlt.hpp"

namespace e2eg {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string hex64(std::uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
    std::vector<std::string_view> out;
    while (true) {
        const auto comma = s.find(',');
        const auto item = trim(s.substr(0, comma));
        if (!item.empty()) out.push_back(item);
        if (comma == std::string_view::npos) break;
        s.remove_prefix(comma + 1);
    }
    return out;
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
    T out{};
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end || value.empty())
        throw ConfigError("config key '" + std::string(key) + "': cannot parse '" + std::string(value) + "'");
    return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError("config key '" + std::string(key) + "': expected a boolean, got '" + std::string(value) + "'");
}

using Setter = std::function<void(ExperimentConfig&, std::string_view, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters() {
    static const std::map<std::string, Setter, std::less<>> table = [] {
        std::map<std::string, Setter, std::less<>> t;
        t["nodes_path"] = [](auto& c, auto, auto v) { c.nodes_path = std::string(v); };
        t["edges_path"] = [](auto& c, auto, auto v) { c.edges_path = std::string(v); };
        t["synth_n"] = [](auto& c, auto k, auto v) { c.synth.n = parse_number<std::size_t>(k, v); };
        t["synth_num_classes"] = [](auto& c, auto k, auto v) { c.synth.num_classes = parse_number<int>(k, v); };
        t["synth_p_in"] = [](auto& c, auto k, auto v) { c.synth.p_in = parse_number<double>(k, v); };
        t["synth_p_out"] = [](auto& c, auto k, auto v) { c.synth.p_out = parse_number<double>(k, v); };
        t["synth_vocab_per_class"] = [](auto& c, auto k, auto v) { c.synth.vocab_per_class = parse_number<std::size_t>(k, v); };
        t["synth_shared_vocab"] = [](auto& c, auto k, auto v) { c.synth.shared_vocab = parse_number<std::size_t>(k, v); };
        t["synth_text_len"] = [](auto& c, auto k, auto v) { c.synth.text_len = parse_number<std::size_t>(k, v); };
        t["synth_text_ambiguity"] = [](auto& c, auto k, auto v) { c.synth.text_ambiguity = parse_number<double>(k, v); };
        t["synth_seed"] = [](auto& c, auto k, auto v) { c.synth_seed = parse_number<std::uint64_t>(k, v); };
        t["train_ratio"] = [](auto& c, auto k, auto v) { c.split_ratios[0] = parse_number<double>(k, v); };
        t["valid_ratio"] = [](auto& c, auto k, auto v) { c.split_ratios[1] = parse_number<double>(k, v); };
        t["test_ratio"] = [](auto& c, auto k, auto v) { c.split_ratios[2] = parse_number<double>(k, v); };
        t["split_seed"] = [](auto& c, auto k, auto v) { c.split_seed = parse_number<std::uint64_t>(k, v); };
        t["resplit"] = [](auto& c, auto k, auto v) { c.resplit = parse_bool(k, v); };
        t["min_df"] = [](auto& c, auto k, auto v) { c.features.min_df = parse_number<std::size_t>(k, v); };
        t["max_features"] = [](auto& c, auto k, auto v) { c.features.max_features = parse_number<std::size_t>(k, v); };
        t["kinds"] = [](auto& c, auto, auto v) {
            c.kinds.clear();
            for (const auto item : split_list(v)) c.kinds.push_back(parse_model_kind(item));
        };
        t["seeds"] = [](auto& c, auto k, auto v) {
            c.seeds.clear();
            for (const auto item : split_list(v)) c.seeds.push_back(parse_number<std::uint64_t>(k, item));
        };
        t["out_dir"] = [](auto& c, auto, auto v) { c.out_dir = std::string(v); };
        t["lr_max"] = [](auto& c, auto k, auto v) { c.train.lr_max = parse_number<double>(k, v); };
        t["batch_size"] = [](auto& c, auto k, auto v) { c.train.batch_size = parse_number<std::size_t>(k, v); };
        t["dropout"] = [](auto& c, auto k, auto v) { c.train.dropout = parse_number<double>(k, v); };
        t["depth"] = [](auto& c, auto k, auto v) { c.train.depth = parse_number<int>(k, v); };
        t["branching"] = [](auto& c, auto k, auto v) { c.train.branching = parse_number<int>(k, v); };
        t["lambda"] = [](auto& c, auto k, auto v) { c.train.lambda = parse_number<double>(k, v); };
        t["pos_weight"] = [](auto& c, auto k, auto v) { c.train.pos_weight = parse_number<double>(k, v); };
        t["delay_rounds"] = [](auto& c, auto k, auto v) { c.train.delay_rounds = parse_number<int>(k, v); };
        t["extra_round"] = [](auto& c, auto k, auto v) { c.train.extra_round = parse_bool(k, v); };
        t["mode"] = [](auto& c, auto, auto v) { c.train.mode = parse_mode(v); };
        t["transductive_heldout_fraction"] = [](auto& c, auto k, auto v) {
            c.train.transductive_heldout_fraction = parse_number<double>(k, v);
        };
        t["patience"] = [](auto& c, auto k, auto v) { c.train.patience = parse_number<int>(k, v); };
        t["epochs_per_round"] = [](auto& c, auto k, auto v) { c.train.epochs_per_round = parse_number<int>(k, v); };
        t["extra_max_epochs"] = [](auto& c, auto k, auto v) { c.train.extra_max_epochs = parse_number<int>(k, v); };
        t["warm_start"] = [](auto& c, auto k, auto v) { c.train.warm_start = parse_bool(k, v); };
        t["embed_dim"] = [](auto& c, auto k, auto v) { c.train.embed_dim = parse_number<std::size_t>(k, v); };
        t["hidden_dim"] = [](auto& c, auto k, auto v) { c.train.hidden_dim = parse_number<std::size_t>(k, v); };
        return t;
    }();
    return table;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_csv_double(const std::string& s) {
    if (s == "nan" || s.empty()) return kNaN;
    try {
        return std::stod(s);
    } catch (const std::exception&) {
        throw FormatError("result table: bad number '" + s + "'");
    }
}

std::string run_stem(ModelKind kind, std::uint64_t seed) {
    return std::string(to_string(kind)) + "_seed" + std::to_string(seed);
}

std::uint64_t hlt_seed(std::uint64_t seed) { return derive_seed(seed, 900); }

}  // namespace

std::string_view to_string(ModelKind k) {
    switch (k) {
        case ModelKind::e2eg: return "e2eg";
        case ModelKind::text_only: return "text_only";
        case ModelKind::degree_mlp: return "degree_mlp";
        case ModelKind::two_stage: return "two_stage";
    }
    return "e2eg";
}

ModelKind parse_model_kind(std::string_view s) {
    if (s == "e2eg") return ModelKind::e2eg;
    if (s == "text_only") return ModelKind::text_only;
    if (s == "degree_mlp") return ModelKind::degree_mlp;
    if (s == "two_stage") return ModelKind::two_stage;
    throw ConfigError("unknown model kind '" + std::string(s) + "'");
}

void ExperimentConfig::validate() const {
    if (seeds.empty()) throw ConfigError("experiment config: at least one seed is required");
    if (kinds.empty()) throw ConfigError("experiment config: at least one model kind is required");
    if (nodes_path.empty() != edges_path.empty())
        throw ConfigError("experiment config: nodes_path and edges_path must be given together");
    if (synthetic()) synth.validate();
    if (features.min_df < 1 || features.max_features < 1) throw ConfigError("min_df and max_features must be >= 1");
    train.validate();
}

void apply_config_value(ExperimentConfig& config, std::string_view key, std::string_view value) {
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
    it->second(config, key, value);
}

ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig config;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = line;
        if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        view = trim(view);
        if (view.empty()) continue;
        const auto eq = view.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected `key = value`");
        apply_config_value(config, trim(view.substr(0, eq)), trim(view.substr(eq + 1)));
    }
    return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    return parse_config(in);
}

void write_config(const ExperimentConfig& c, std::ostream& out) {
    if (!c.synthetic()) {
        out << "nodes_path = " << c.nodes_path << "\nedges_path = " << c.edges_path << '\n';
    } else {
        out << "synth_n = " << c.synth.n << "\nsynth_num_classes = " << c.synth.num_classes
            << "\nsynth_p_in = " << fmt_double(c.synth.p_in) << "\nsynth_p_out = " << fmt_double(c.synth.p_out)
            << "\nsynth_vocab_per_class = " << c.synth.vocab_per_class << "\nsynth_shared_vocab = " << c.synth.shared_vocab
            << "\nsynth_text_len = " << c.synth.text_len << "\nsynth_text_ambiguity = " << fmt_double(c.synth.text_ambiguity)
            << "\nsynth_seed = " << c.synth_seed << '\n';
    }
    out << "train_ratio = " << fmt_double(c.split_ratios[0]) << "\nvalid_ratio = " << fmt_double(c.split_ratios[1])
        << "\ntest_ratio = " << fmt_double(c.split_ratios[2]) << "\nsplit_seed = " << c.split_seed
        << "\nresplit = " << (c.resplit ? "true" : "false") << "\nmin_df = " << c.features.min_df
        << "\nmax_features = " << c.features.max_features << "\nkinds = ";
    for (std::size_t i = 0; i < c.kinds.size(); ++i) out << (i ? "," : "") << to_string(c.kinds[i]);
    out << "\nseeds = ";
    for (std::size_t i = 0; i < c.seeds.size(); ++i) out << (i ? "," : "") << c.seeds[i];
    const auto& t = c.train;
    out << "\nlr_max = " << fmt_double(t.lr_max) << "\nbatch_size = " << t.batch_size
        << "\ndropout = " << fmt_double(t.dropout) << "\ndepth = " << t.depth << "\nbranching = " << t.branching
        << "\nlambda = " << fmt_double(t.lambda) << "\npos_weight = " << fmt_double(t.pos_weight)
        << "\ndelay_rounds = " << t.delay_rounds << "\nextra_round = " << (t.extra_round ? "true" : "false")
        << "\nmode = " << to_string(t.mode)
        << "\ntransductive_heldout_fraction = " << fmt_double(t.transductive_heldout_fraction)
        << "\npatience = " << t.patience << "\nepochs_per_round = " << t.epochs_per_round
        << "\nextra_max_epochs = " << t.extra_max_epochs << "\nwarm_start = " << (t.warm_start ? "true" : "false")
        << "\nembed_dim = " << t.embed_dim << "\nhidden_dim = " << t.hidden_dim << '\n';
    if (!c.out_dir.empty()) out << "out_dir = " << c.out_dir << '\n';
}

PreparedGraph load_experiment_data(const ExperimentConfig& config) {
    TextGraph graph;
    if (config.synthetic()) {
        graph = split_nodes(generate_synthetic(config.synth, config.synth_seed), config.split_ratios, config.split_seed);
    } else {
        graph = load_graph(config.nodes_path, config.edges_path);
        if (config.resplit) graph = split_nodes(graph, config.split_ratios, config.split_seed);
    }
    return prepare_graph(std::move(graph), config.features);
}

void ResultTable::recompute_aggregates() {
    aggregates.clear();
    std::vector<std::pair<ModelKind, Mode>> order;
    for (const auto& r : rows)
        if (std::find(order.begin(), order.end(), std::pair{r.kind, r.mode}) == order.end()) order.emplace_back(r.kind, r.mode);
    for (const auto& [kind, mode] : order) {
        std::vector<double> tr, va, te;
        for (const auto& r : rows) {
            if (r.kind != kind || r.mode != mode || !r.ok) continue;
            tr.push_back(r.train_acc);
            va.push_back(r.valid_acc);
            te.push_back(r.test_acc);
        }
        AggregateRow agg;
        agg.kind = kind;
        agg.mode = mode;
        agg.runs = te.size();
        const MeanStd none{kNaN, kNaN};
        agg.train = tr.empty() ? none : aggregate(tr);
        agg.valid = va.empty() ? none : aggregate(va);
        agg.test = te.empty() ? none : aggregate(te);
        aggregates.push_back(agg);
    }
}

const AggregateRow* ResultTable::aggregate_for(ModelKind kind) const {
    for (const auto& a : aggregates)
        if (a.kind == kind) return &a;
    return nullptr;
}

std::vector<double> ResultTable::test_accuracies(ModelKind kind) const {
    std::vector<double> out;
    for (const auto& r : rows)
        if (r.kind == kind && r.ok) out.push_back(r.test_acc);
    return out;
}

std::vector<double> ResultTable::valid_accuracies(ModelKind kind) const {
    std::vector<double> out;
    for (const auto& r : rows)
        if (r.kind == kind && r.ok) out.push_back(r.valid_acc);
    return out;
}

void ResultTable::write_csv(std::ostream& out) const {
    out << "row_type,kind,mode,seed,status,runs,train_acc,valid_acc,test_acc,train_std,valid_std,test_std\n";
    for (const auto& r : rows) {
        out << "run," << to_string(r.kind) << ',' << to_string(r.mode) << ',' << r.seed << ','
            << (r.ok ? "ok" : "failed") << ",1," << fmt_double(r.ok ? r.train_acc : kNaN) << ','
            << fmt_double(r.ok ? r.valid_acc : kNaN) << ',' << fmt_double(r.ok ? r.test_acc : kNaN) << ",,,\n";
    }
    for (const auto& a : aggregates) {
        out << "aggregate," << to_string(a.kind) << ',' << to_string(a.mode) << ",all,ok," << a.runs << ','
            << fmt_double(a.train.mean) << ',' << fmt_double(a.valid.mean) << ',' << fmt_double(a.test.mean) << ','
            << fmt_double(a.train.stddev) << ',' << fmt_double(a.valid.stddev) << ',' << fmt_double(a.test.stddev)
            << '\n';
    }
}

ResultTable ResultTable::read_csv(std::istream& in) {
    ResultTable table;
    std::string line;
    if (!std::getline(in, line) || line.rfind("row_type,", 0) != 0) throw FormatError("result table: missing header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 12) throw FormatError("result table: expected 12 columns");
        if (f[0] == "run") {
            RunRow r;
            r.kind = parse_model_kind(f[1]);
            r.mode = parse_mode(f[2]);
            r.seed = std::stoull(f[3]);
            r.ok = f[4] == "ok";
            r.train_acc = parse_csv_double(f[6]);
            r.valid_acc = parse_csv_double(f[7]);
            r.test_acc = parse_csv_double(f[8]);
            table.rows.push_back(r);
        } else if (f[0] == "aggregate") {
            AggregateRow a;
            a.kind = parse_model_kind(f[1]);
            a.mode = parse_mode(f[2]);
            a.runs = std::stoull(f[5]);
            a.train = {parse_csv_double(f[6]), parse_csv_double(f[9])};
            a.valid = {parse_csv_double(f[7]), parse_csv_double(f[10])};
            a.test = {parse_csv_double(f[8]), parse_csv_double(f[11])};
            table.aggregates.push_back(a);
        } else {
            throw FormatError("result table: unknown row type '" + f[0] + "'");
        }
    }
    return table;
}

RunOutput train_kind(ModelKind kind, const PreparedGraph& data, const TrainConfig& config) {
    RunOutput out;
    switch (kind) {
        case ModelKind::e2eg: {
            const auto hlt = build_hlt(data.tfidf, config.branching, config.depth, hlt_seed(config.seed));
            auto r = run_curriculum(data, hlt, config);
            out.predictions = predict_all(r.best, data);
            out.history = std::move(r.history);
            out.val_before_extra = r.val_before_extra;
            out.val_after_extra = r.val_after_extra;
            out.checkpoint = std::move(r.best);
            break;
        }
        case ModelKind::text_only: {
            auto r = train_text_only(data, config);
            out.predictions = predict_all(r.best, data);
            out.history = std::move(r.history);
            out.checkpoint = std::move(r.best);
            break;
        }
        case ModelKind::degree_mlp: {
            auto r = train_degree_mlp(data, config);
            out.predictions = std::move(r.predictions);
            out.history = std::move(r.history);
            break;
        }
        case ModelKind::two_stage: {
            const auto hlt = build_hlt(data.tfidf, config.branching, config.depth, hlt_seed(config.seed));
            auto r = train_two_stage(data, hlt, config);
            out.predictions = std::move(r.predictions);
            out.history = std::move(r.history);
            out.checkpoint = std::move(r.stage1);
            break;
        }
    }
    return out;
}

ExperimentOutput run_experiment(const ExperimentConfig& config) {
    config.validate();
    return run_experiment(config, load_experiment_data(config));
}

ExperimentOutput run_experiment(const ExperimentConfig& config, const PreparedGraph& data) {
    config.validate();
    namespace fs = std::filesystem;
    const bool write = !config.out_dir.empty();
    const fs::path root(config.out_dir);
    if (write) {
        fs::create_directories(root / "history");
        fs::create_directories(root / "predictions");
        fs::create_directories(root / "checkpoints");
    }
    const auto split_fp = hex64(split_fingerprint(data.graph));
    const auto vocab_fp = hex64(data.vocab.fingerprint());

    ExperimentOutput out;
    for (const auto kind : config.kinds) {
        for (const auto seed : config.seeds) {
            TrainConfig tc = config.train;
            tc.seed = seed;
            RunRow row;
            row.kind = kind;
            row.mode = tc.mode;
            row.seed = seed;
            try {
                auto run = train_kind(kind, data, tc);
                row.train_acc = split_accuracy(run.predictions, data.graph, Split::train);
                row.valid_acc = split_accuracy(run.predictions, data.graph, Split::valid);
                row.test_acc = split_accuracy(run.predictions, data.graph, Split::test);
                if (write) {
                    const auto stem = run_stem(kind, seed);
                    std::ofstream hist(root / "history" / (stem + ".csv"));
                    hist << "# kind=" << to_string(kind) << " seed=" << seed << " split_fp=" << split_fp
                         << " vocab_fp=" << vocab_fp << '\n';
                    run.history.write_csv(hist, to_string(kind));
                    std::ofstream preds(root / "predictions" / (stem + ".txt"));
                    for (const int p : run.predictions) preds << p << '\n';
                    if (run.checkpoint) save_checkpoint(*run.checkpoint, root / "checkpoints" / (stem + ".ckpt"));
                }
                out.predictions[kind].push_back(run.predictions);
                out.runs[kind].push_back(std::move(run));
            } catch (const std::exception& e) {
                row.ok = false;
                row.error = e.what();
                out.predictions[kind].emplace_back();
                out.runs[kind].emplace_back();
            }
            out.table.rows.push_back(row);
        }
    }
    out.table.recompute_aggregates();

    if (write) {
        std::ofstream csv(root / "results.csv");
        out.table.write_csv(csv);
        std::ofstream md(root / "summary.md");
        md << "# Experiment summary\n\n";
        md << "- nodes: " << data.size() << ", classes: " << data.graph.num_classes() << ", vocabulary: "
           << data.vocab.size() << "\n- mode: " << to_string(config.train.mode) << ", depth: " << config.train.depth
           << ", seeds: " << config.seeds.size() << "\n- split fingerprint: " << split_fp
           << ", vocabulary fingerprint: " << vocab_fp << "\n\n";
        md << "| model | runs | train acc | valid acc | test acc (mean +- std) | test median |\n";
        md << "|---|---|---|---|---|---|\n";
        for (const auto& a : out.table.aggregates) {
            const auto test = out.table.test_accuracies(a.kind);
            char line[256];
            std::snprintf(line, sizeof(line), "| %s | %zu | %.4f | %.4f | %.4f +- %.4f | %.4f |\n",
                          std::string(to_string(a.kind)).c_str(), a.runs, a.train.mean, a.valid.mean, a.test.mean,
                          a.test.stddev, test.empty() ? kNaN : median(test));
            md << line;
        }
        if (std::any_of(config.kinds.begin(), config.kinds.end(), [](auto k) { return k == ModelKind::degree_mlp; })) {
            md << "\nThe topology-only baseline is a two-layer perceptron over node degree features, "
                  "not a message-passing network.\n";
        }
        std::vector<std::string> failures;
        for (const auto& r : out.table.rows)
            if (!r.ok) failures.push_back(std::string(to_string(r.kind)) + " seed " + std::to_string(r.seed) + ": " + r.error);
        if (!failures.empty()) {
            md << "\n## Failed runs\n\n";
            for (const auto& f : failures) md << "- " << f << '\n';
        }
    }
    return out;
}

DisagreementReport disagreement_samples(std::span<const std::vector<int>> preds_a,
                                        std::span<const std::vector<int>> preds_b, const TextGraph& graph,
                                        std::span<const NodeId> subset) {
    if (preds_a.empty() || preds_b.empty()) throw DimensionError("disagreement_samples: need at least one seed per model");
    if (preds_a.size() != preds_b.size()) throw DimensionError("disagreement_samples: seed counts differ between models");
    for (const auto& p : preds_a)
        if (p.size() != graph.size()) throw DimensionError("disagreement_samples: model A seed does not cover the graph");
    for (const auto& p : preds_b)
        if (p.size() != graph.size()) throw DimensionError("disagreement_samples: model B seed does not cover the graph");

    DisagreementReport report;
    for (const auto v : subset) {
        if (v >= graph.size()) throw DimensionError("disagreement_samples: subset node out of range");
        const int gold = graph.label(v);
        if (gold < 0) continue;
        const bool a_all_right = std::all_of(preds_a.begin(), preds_a.end(), [&](const auto& p) { return p[v] == gold; });
        const bool a_all_wrong = std::all_of(preds_a.begin(), preds_a.end(), [&](const auto& p) { return p[v] != gold; });
        const bool b_all_right = std::all_of(preds_b.begin(), preds_b.end(), [&](const auto& p) { return p[v] == gold; });
        const bool b_all_wrong = std::all_of(preds_b.begin(), preds_b.end(), [&](const auto& p) { return p[v] != gold; });

        // With at least one seed, "all right" and "all wrong" exclude each other, so the buckets are disjoint.
        std::vector<DisagreementEntry>* bucket = nullptr;
        if (a_all_right && b_all_wrong) bucket = &report.a_over_b;
        else if (b_all_right && a_all_wrong) bucket = &report.b_over_a;
        else if (a_all_wrong && b_all_wrong) bucket = &report.both_wrong;
        if (bucket == nullptr) continue;

        DisagreementEntry entry;
        entry.node = v;
        entry.text = graph.text(v);
        entry.gold = gold;
        for (const auto& p : preds_a) entry.preds_a.push_back(p[v]);
        for (const auto& p : preds_b) entry.preds_b.push_back(p[v]);
        for (const auto u : k_hop_neighborhood(graph, v, 2)) ++entry.two_hop_classes[graph.label(u)];
        bucket->push_back(std::move(entry));
    }
    return report;
}

void write_report_json(const DisagreementReport& report, std::string_view name_a, std::string_view name_b,
                       std::ostream& out) {
    using nlohmann::json;
    const auto to_json = [](const std::vector<DisagreementEntry>& entries) {
        json arr = json::array();
        for (const auto& e : entries) {
            json hist = json::object();
            for (const auto& [cls, count] : e.two_hop_classes)
                hist[cls < 0 ? std::string("unlabeled") : std::to_string(cls)] = count;
            arr.push_back({{"node", e.node},
                           {"text", e.text},
                           {"gold", e.gold},
                           {"preds_a", e.preds_a},
                           {"preds_b", e.preds_b},
                           {"two_hop_class_histogram", hist}});
        }
        return arr;
    };
    json doc = {{"model_a", std::string(name_a)},
                {"model_b", std::string(name_b)},
                {"a_correct_b_wrong", to_json(report.a_over_b)},
                {"b_correct_a_wrong", to_json(report.b_over_a)},
                {"both_wrong", to_json(report.both_wrong)}};
    out << doc.dump(2) << '\n';
}

}  // namespace e2eg
