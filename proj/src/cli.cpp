#include "ecmkit/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <algorithm>
#include <map>
#include <numeric>
#include <ostream>
#include <set>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "ecmkit/config.hpp"
#include "ecmkit/error.hpp"
#include "ecmkit/features.hpp"
#include "ecmkit/fit.hpp"
#include "ecmkit/io.hpp"
#include "ecmkit/metrics.hpp"
#include "ecmkit/model.hpp"
#include "ecmkit/parallel.hpp"
#include "ecmkit/plot.hpp"
#include "ecmkit/preprocess.hpp"

namespace ecmkit {

namespace fs = std::filesystem;

namespace {

struct Globals {
    std::string config_path;
    std::uint64_t seed = 0;
    CLI::Option* seed_option = nullptr;
    int jobs = 1;
    std::string out_dir = ".";
};

struct Context {
    RunConfig config;
    std::uint64_t seed = 42;
    int jobs = 1;
    fs::path out;
    std::ostream& log;
};

Context make_context(const Globals& g, std::ostream& log) {
    RunConfig config = g.config_path.empty() ? RunConfig{} : parse_run_config(read_text_file(g.config_path));
    std::optional<std::uint64_t> cli_seed;
    if (g.seed_option && g.seed_option->count() > 0) cli_seed = g.seed;
    const std::uint64_t seed = resolve_seed(cli_seed, config, std::getenv("ECMKIT_SEED"));
    apply_seed(config, seed);
    if (g.jobs < 1) throw Error(ErrorCode::InvalidConfig, "--jobs must be at least 1");
    return {std::move(config), seed, g.jobs, fs::path(g.out_dir), log};
}

void write_output(const Context& ctx, const std::string& name, std::string_view text) {
    write_text_file(ctx.out / name, text);
    ctx.log << "wrote " << (ctx.out / name).string() << "\n";
}

ColumnMapping read_mapping(const std::string& path) {
    ColumnMapping m;
    if (path.empty()) return m;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::ParseError, fmt::format("mapping: {}", e.what()));
    }
    const std::set<std::string> allowed{"id", "circuit", "freq", "z", "zreal", "zimag", "delimiter",
                                        "sort_by_frequency"};
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key)) throw Error(ErrorCode::InvalidConfig, fmt::format("unknown mapping key '{}'", key));
    }
    try {
        m.id = j.value("id", m.id);
        m.circuit = j.value("circuit", m.circuit);
        m.freq = j.value("freq", m.freq);
        m.z = j.value("z", m.z);
        m.zreal = j.value("zreal", m.zreal);
        m.zimag = j.value("zimag", m.zimag);
        const std::string delimiter = j.value("delimiter", std::string(1, m.delimiter));
        if (delimiter.size() != 1) throw Error(ErrorCode::InvalidConfig, "mapping delimiter must be one character");
        m.delimiter = delimiter[0];
        m.sort_by_frequency = j.value("sort_by_frequency", m.sort_by_frequency);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, fmt::format("mapping: {}", e.what()));
    }
    return m;
}

struct InputOptions {
    std::string path;
    std::string format = "native-csv";
    std::string mapping;
};

void add_input_options(CLI::App* sub, InputOptions& in) {
    sub->add_option("--input,-i", in.path, "Dataset file")->required();
    sub->add_option("--format", in.format, "native-csv | native-jsonl | imported-csv")->capture_default_str();
    sub->add_option("--mapping", in.mapping, "JSON column mapping for imported-csv");
}

Dataset load_dataset(const InputOptions& in) {
    return read_dataset(in.path, dataset_format_from_string(in.format), read_mapping(in.mapping));
}

std::vector<features::FeatureDef> bank_of(const RunConfig& config) {
    return config.features.bank.empty() ? features::default_bank() : features::bank_from_names(config.features.bank);
}

FeatureMatrix raw_matrix(std::span<const Spectrum> spectra) {
    return normalize_max_real(raw_feature_matrix(spectra));
}

FeatureMatrix engineered_matrix(std::span<const Spectrum> spectra, std::span<const features::FeatureDef> bank, int jobs,
                                bool normalize) {
    if (!normalize) return features::featurize(spectra, bank, jobs).matrix;
    std::vector<Spectrum> scaled(spectra.begin(), spectra.end());
    for (auto& s : scaled) s = normalize_max_real(std::move(s));
    return features::featurize(scaled, bank, jobs).matrix;
}

FeatureMatrix subset_rows(const FeatureMatrix& m, const std::vector<bool>& keep) {
    FeatureMatrix out;
    const auto n = static_cast<std::size_t>(std::count(keep.begin(), keep.end(), true));
    out.X = Matrix(n, m.cols());
    out.columns = m.columns;
    out.freq_grid = m.freq_grid;
    std::size_t k = 0;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        if (!keep[r]) continue;
        std::copy(m.X.row(r).begin(), m.X.row(r).end(), out.X.row(k).begin());
        if (r < m.labels.size()) out.labels.push_back(m.labels[r]);
        if (r < m.ids.size()) out.ids.push_back(m.ids[r]);
        ++k;
    }
    return out;
}

std::vector<bool> invert(const std::vector<bool>& mask) {
    std::vector<bool> out(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) out[i] = !mask[i];
    return out;
}

bool is_raw_layout(const FeatureMatrix& m) {
    return !m.columns.empty() && m.columns.front() == "zreal_0";
}

ModelInput model_input_for(const FeatureMatrix& m, const RunConfig& config) {
    ModelInput in;
    in.kind = is_raw_layout(m) ? ModelInput::Kind::RawMaxReal : ModelInput::Kind::Features;
    in.grid_points = config.interpolation.points;
    in.grid_fmin = config.interpolation.fmin;
    in.grid_fmax = config.interpolation.fmax;
    in.normalized = in.kind == ModelInput::Kind::Features && config.features.normalize;
    return in;
}

std::string train_model(const std::string& kind, const FeatureMatrix& m, const RunConfig& config, int jobs) {
    const auto enc = LabelEncoding::fit(m.labels);
    const auto y = enc.encode(m.labels);
    if (kind == "rf") {
        auto model = train_random_forest(m.X, y, enc.classes.size(), config.forest, jobs);
        model.class_names = enc.classes;
        model.feature_names = m.columns;
        model.input = model_input_for(m, config);
        return serialize(model);
    }
    if (kind == "gbt") {
        auto model = train_gbt(m.X, y, enc.classes.size(), config.gbt, jobs);
        model.class_names = enc.classes;
        model.feature_names = m.columns;
        model.input = model_input_for(m, config);
        return serialize(model);
    }
    throw Error(ErrorCode::InvalidConfig, fmt::format("unknown model kind '{}' (rf or gbt)", kind));
}

// Reorders the matrix columns to the model's feature order.
Matrix aligned_inputs(const LoadedModel& model, const FeatureMatrix& m) {
    const auto& names = model.feature_names();
    if (names.empty() || names == m.columns) return m.X;
    std::vector<std::size_t> keep;
    for (const auto& name : names) {
        const auto it = std::find(m.columns.begin(), m.columns.end(), name);
        if (it == m.columns.end()) {
            throw Error(ErrorCode::ShapeMismatch, fmt::format("input lacks the model feature '{}'", name));
        }
        keep.push_back(static_cast<std::size_t>(it - m.columns.begin()));
    }
    return select_columns(m, keep).X;
}

std::vector<std::string> predicted_labels(const LoadedModel& model, const Matrix& X) {
    const auto idx = argmax_rows(model.predict_proba(X));
    std::vector<std::string> out;
    out.reserve(idx.size());
    for (int k : idx) out.push_back(model.class_names()[static_cast<std::size_t>(k)]);
    return out;
}

struct Evaluation {
    ConfusionMatrix cm;
    Scores scores;
};

Evaluation evaluate_model(const LoadedModel& model, const FeatureMatrix& test) {
    const auto predicted = predicted_labels(model, aligned_inputs(model, test));
    Evaluation e;
    e.cm = confusion(test.labels, predicted, model.class_names());
    e.scores = scores(e.cm);
    return e;
}

void write_evaluation(const Context& ctx, const std::string& name, const Evaluation& e) {
    write_output(ctx, fmt::format("confusion_{}.csv", name), confusion_csv(e.cm));
    write_output(ctx, fmt::format("scores_{}.csv", name), scores_csv(e.cm, e.scores));
    write_output(ctx, fmt::format("confusion_{}.svg", name), plot_confusion(e.cm, fmt::format("{} confusion", name)));
    ctx.log << fmt::format("{}: weighted F1 {:.4f}, macro F1 {:.4f}, weighted recall {:.4f}, macro recall {:.4f}\n",
                           name, e.scores.f1_weighted, e.scores.f1_macro, e.scores.recall_weighted,
                           e.scores.recall_macro);
}

std::string split_csv(const std::vector<std::string>& ids, const std::vector<bool>& test) {
    std::string out = "id,set\n";
    for (std::size_t i = 0; i < ids.size(); ++i) out += csv_escape(ids[i]) + (test[i] ? ",test\n" : ",train\n");
    return out;
}

std::map<std::string, bool> read_split(const std::string& path) {
    const auto rows = parse_csv(read_text_file(path));
    if (rows.empty() || rows.front() != std::vector<std::string>{"id", "set"}) {
        throw Error(ErrorCode::ParseError, "split file header must be id,set");
    }
    std::map<std::string, bool> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != 2) throw Error(ErrorCode::ParseError, fmt::format("line {}: expected 2 cells", r + 1));
        out[rows[r][0]] = rows[r][1] == "test";
    }
    return out;
}

std::string filter_summary_csv(const FilterReport& report) {
    std::set<std::string> classes;
    for (const auto& [c, n] : report.kept_per_class) classes.insert(c);
    for (const auto& [c, n] : report.removed_per_class) classes.insert(c);
    std::string out = "class,kept,removed\n";
    for (const auto& c : classes) {
        const auto kept = report.kept_per_class.count(c) ? report.kept_per_class.at(c) : 0;
        const auto removed = report.removed_per_class.count(c) ? report.removed_per_class.at(c) : 0;
        out += fmt::format("{},{},{}\n", csv_escape(c), kept, removed);
    }
    for (const auto& [reason, n] : report.reason_counts()) out += fmt::format("reason:{},,{}\n", to_string(reason), n);
    return out;
}

std::string relevance_csv(const features::RelevanceTable& t) {
    std::string out = "feature,p_value,selected\n";
    for (std::size_t i = 0; i < t.features.size(); ++i) {
        out += fmt::format("{},{},{}\n", csv_escape(t.features[i]), format_double(t.p_values[i]),
                           t.selected[i] ? "true" : "false");
    }
    return out;
}

std::vector<std::size_t> selected_or_all(const features::RelevanceTable& t, std::ostream& log) {
    auto keep = t.selected_indices();
    if (keep.empty()) {
        log << "warning: no feature passed the relevance test; keeping all of them\n";
        keep.resize(t.features.size());
        std::iota(keep.begin(), keep.end(), 0);
    }
    return keep;
}

FeatureMatrix model_inputs_for_spectra(const LoadedModel& model, std::span<const Spectrum> spectra, int jobs) {
    const auto& input = model.input();
    const auto grid = log_grid(input.grid_points, input.grid_fmin, input.grid_fmax);
    std::vector<Spectrum> on_grid(spectra.size());
    parallel_for(spectra.size(), jobs, [&](std::size_t i) { on_grid[i] = interpolate(spectra[i], grid).spectrum; });
    if (input.kind == ModelInput::Kind::RawMaxReal) return raw_matrix(on_grid);
    return engineered_matrix(on_grid, features::bank_from_names(model.feature_names()), jobs, input.normalized);
}

// Subcommands.

int cmd_generate(const Context& ctx, const std::string& format) {
    const auto fmt_kind = dataset_format_from_string(format);
    const Dataset d = generate_dataset(ctx.config.generator, ctx.jobs);
    const std::string name = fmt_kind == DatasetFormat::NativeJsonl ? "dataset.jsonl" : "dataset.csv";
    write_dataset(d, ctx.out / name, fmt_kind);
    ctx.log << fmt::format("generated {} spectra (seed {})\n", d.size(), ctx.seed);
    return kExitOk;
}

int cmd_filter(const Context& ctx, const InputOptions& in, const std::string& mode) {
    FilterConfig filter = ctx.config.filter;
    if (mode == "consecutive") {
        filter.real_increase_mode = FilterConfig::RealIncreaseMode::Consecutive;
    } else if (mode == "all-pairs") {
        filter.real_increase_mode = FilterConfig::RealIncreaseMode::AllPairs;
    } else if (!mode.empty()) {
        throw Error(ErrorCode::InvalidConfig, "--mode must be all-pairs or consecutive");
    }
    const auto report = filter_dataset(load_dataset(in), filter);
    write_output(ctx, "filtered.csv", dataset_to_csv(report.kept));
    write_output(ctx, "filter_report.csv", filter_report_csv(report));
    write_output(ctx, "filter_summary.csv", filter_summary_csv(report));
    ctx.log << fmt::format("rejected {} of {} spectra\n", report.rejected_count(), report.decisions.size());
    return kExitOk;
}

int cmd_interp(const Context& ctx, const InputOptions& in) {
    const auto set = interpolate_dataset(load_dataset(in), ctx.config.interpolation, ctx.jobs);
    Dataset d;
    d.spectra = set.spectra;
    write_output(ctx, "interpolated.csv", dataset_to_csv(d));
    ctx.log << fmt::format("{} spectra on a {}-point grid, {} extrapolated\n", set.spectra.size(), set.grid.size(),
                           set.extrapolated);
    return kExitOk;
}

int cmd_featurize(const Context& ctx, const InputOptions& in, bool raw) {
    const auto set = interpolate_dataset(load_dataset(in), ctx.config.interpolation, ctx.jobs);
    if (raw) {
        write_output(ctx, "raw.csv", feature_matrix_to_csv(raw_matrix(set.spectra)));
    } else {
        const auto bank = bank_of(ctx.config);
        write_output(ctx, "features.csv", feature_matrix_to_csv(engineered_matrix(set.spectra, bank, ctx.jobs, ctx.config.features.normalize)));
    }
    return kExitOk;
}

int cmd_select(const Context& ctx, const std::string& input) {
    const auto m = feature_matrix_from_csv(read_text_file(input));
    const auto table = features::select_relevant(m, ctx.config.features.fdr);
    write_output(ctx, "relevance.csv", relevance_csv(table));
    const auto keep = selected_or_all(table, ctx.log);
    write_output(ctx, "selected.csv", feature_matrix_to_csv(select_columns(m, keep)));
    ctx.log << fmt::format("selected {} of {} features\n", table.selected_indices().size(), table.features.size());
    return kExitOk;
}

int cmd_train(const Context& ctx, const std::string& input, const std::string& kind, double test_fraction) {
    auto m = feature_matrix_from_csv(read_text_file(input));
    if (test_fraction > 0.0) {
        const auto enc = LabelEncoding::fit(m.labels);
        const auto test = stratified_split(enc.encode(m.labels), test_fraction, split_seed(ctx.seed));
        write_output(ctx, "split.csv", split_csv(m.ids, test));
        m = subset_rows(m, invert(test));
    }
    write_output(ctx, fmt::format("model_{}.json", kind), train_model(kind, m, ctx.config, ctx.jobs));
    return kExitOk;
}

int cmd_evaluate(const Context& ctx, const std::string& model_path, const std::string& input,
                 const std::string& split_path, const std::string& name) {
    const auto model = deserialize_model(read_text_file(model_path));
    auto m = feature_matrix_from_csv(read_text_file(input));
    if (!split_path.empty()) {
        const auto split = read_split(split_path);
        std::vector<bool> keep(m.rows());
        for (std::size_t r = 0; r < m.rows(); ++r) {
            const auto it = split.find(m.ids[r]);
            keep[r] = it != split.end() && it->second;
        }
        m = subset_rows(m, keep);
    }
    write_evaluation(ctx, name.empty() ? (model.is_forest ? "rf" : "gbt") : name, evaluate_model(model, m));
    return kExitOk;
}

int cmd_classify(const Context& ctx, const std::string& model_path, const InputOptions& in) {
    const auto model = deserialize_model(read_text_file(model_path));
    const auto d = load_dataset(in);
    const auto m = model_inputs_for_spectra(model, d.spectra, ctx.jobs);
    const auto proba = model.predict_proba(aligned_inputs(model, m));
    const auto idx = argmax_rows(proba);
    std::string out = "id,predicted";
    for (const auto& c : model.class_names()) out += ",p_" + csv_escape(c);
    out += "\n";
    for (std::size_t r = 0; r < d.size(); ++r) {
        out += csv_escape(d.spectra[r].id) + "," + csv_escape(model.class_names()[static_cast<std::size_t>(idx[r])]);
        for (double p : proba.row(r)) out += "," + format_double(p);
        out += "\n";
    }
    write_output(ctx, "predictions.csv", out);
    return kExitOk;
}

std::map<std::string, std::string> read_predictions(const std::string& path) {
    const auto rows = parse_csv(read_text_file(path));
    if (rows.empty() || rows.front().size() < 2 || rows.front()[0] != "id" || rows.front()[1] != "predicted") {
        throw Error(ErrorCode::ParseError, "label file header must start with id,predicted");
    }
    std::map<std::string, std::string> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() < 2) throw Error(ErrorCode::ParseError, fmt::format("line {}: expected id,predicted", r + 1));
        out[rows[r][0]] = rows[r][1];
    }
    return out;
}

int cmd_fit(const Context& ctx, const InputOptions& in, const std::string& labels_path, const std::string& circuit) {
    const auto d = load_dataset(in);
    std::map<std::string, std::string> predicted;
    if (!labels_path.empty()) predicted = read_predictions(labels_path);
    std::vector<std::string> circuits(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto& s = d.spectra[i];
        if (!circuit.empty()) {
            circuits[i] = circuit;
        } else if (!labels_path.empty()) {
            const auto it = predicted.find(s.id);
            if (it == predicted.end()) {
                throw Error(ErrorCode::UnknownLabel, fmt::format("no predicted label for '{}'", s.id));
            }
            circuits[i] = it->second;
        } else {
            circuits[i] = s.label;
        }
        if (circuits[i].empty()) {
            throw Error(ErrorCode::EmptyLabel, fmt::format("spectrum '{}' has no circuit; pass --labels or --circuit",
                                                           s.id));
        }
    }
    std::vector<FitRecord> records(d.size());
    parallel_for(d.size(), ctx.jobs, [&](std::size_t i) {
        const auto model = parse_circuit(circuits[i]);
        const auto& s = d.spectra[i];
        auto& rec = records[i];
        rec.id = s.id;
        rec.circuit = model.canonical_name();
        rec.names = model.param_names();
        rec.result = fit_params(model, s, initial_guess(model, s), ctx.config.fit);
        rec.quality = fit_quality(model, rec.result.params, s);
    });
    write_output(ctx, "fits.csv", fit_results_csv(records));
    const auto converged = std::count_if(records.begin(), records.end(), [](const auto& r) { return r.result.converged; });
    ctx.log << fmt::format("fitted {} spectra, {} converged\n", records.size(), converged);
    return kExitOk;
}

int cmd_plot(const Context& ctx, const InputOptions& in, const std::string& id, const std::string& kind, bool fit) {
    const auto d = load_dataset(in);
    if (d.spectra.empty()) throw Error(ErrorCode::EmptySpectrum, "dataset holds no spectra");
    const Spectrum* s = &d.spectra.front();
    if (!id.empty()) {
        const auto it = std::find_if(d.spectra.begin(), d.spectra.end(), [&](const Spectrum& x) { return x.id == id; });
        if (it == d.spectra.end()) throw Error(ErrorCode::UnknownLabel, fmt::format("no spectrum with id '{}'", id));
        s = &*it;
    }
    PlotOptions options;
    options.title = s->label.empty() ? s->id : fmt::format("{} ({})", s->id, s->label);
    if (fit) {
        const auto model = parse_circuit(s->label);
        const auto result = fit_params(model, *s, initial_guess(model, *s), ctx.config.fit);
        options.overlay = circuit_impedance(model, result.params, s->freq);
    }
    write_output(ctx, fmt::format("plot_{}.svg", s->id), plot_spectrum(*s, plot_kind_from_string(kind), options));
    return kExitOk;
}

std::string importance_csv(const std::vector<std::string>& names, const std::vector<double>& importance) {
    std::vector<std::size_t> order(names.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return importance[a] > importance[b]; });
    std::string out = "feature,importance\n";
    for (auto i : order) out += fmt::format("{},{}\n", csv_escape(names[i]), format_double(importance[i]));
    return out;
}

int cmd_pipeline(const Context& ctx) {
    const auto& cfg = ctx.config;
    write_output(ctx, "config.json", run_config_to_json(cfg));

    const Dataset d = generate_dataset(cfg.generator, ctx.jobs);
    write_dataset(d, ctx.out / "dataset.csv", DatasetFormat::NativeCsv);
    ctx.log << fmt::format("generated {} spectra (seed {})\n", d.size(), ctx.seed);

    const auto report = filter_dataset(d, cfg.filter);
    write_output(ctx, "filter_report.csv", filter_report_csv(report));
    write_output(ctx, "filter_summary.csv", filter_summary_csv(report));
    ctx.log << fmt::format("rejected {} of {} spectra\n", report.rejected_count(), d.size());

    const auto set = interpolate_dataset(report.kept, cfg.interpolation, ctx.jobs);
    const FeatureMatrix raw = raw_matrix(set.spectra);
    const auto bank = bank_of(cfg);
    const FeatureMatrix engineered = engineered_matrix(set.spectra, bank, ctx.jobs, ctx.config.features.normalize);
    write_output(ctx, "features.csv", feature_matrix_to_csv(engineered));

    const auto enc = LabelEncoding::fit(raw.labels);
    const auto y = enc.encode(raw.labels);
    const auto test = stratified_split(y, cfg.test_fraction, split_seed(ctx.seed));
    const auto train = invert(test);
    write_output(ctx, "split.csv", split_csv(raw.ids, test));

    const auto eng_train = subset_rows(engineered, train);
    std::vector<std::size_t> keep(engineered.cols());
    std::iota(keep.begin(), keep.end(), 0);
    if (cfg.features.select) {
        const auto table = features::select_relevant(eng_train, cfg.features.fdr);
        write_output(ctx, "relevance.csv", relevance_csv(table));
        keep = selected_or_all(table, ctx.log);
        ctx.log << fmt::format("selected {} of {} features\n", keep.size(), table.features.size());
    }
    const FeatureMatrix selected = select_columns(engineered, keep);

    const std::string rf_text = train_model("rf", subset_rows(raw, train), cfg, ctx.jobs);
    write_output(ctx, "model_rf.json", rf_text);
    const std::string gbt_text = train_model("gbt", subset_rows(selected, train), cfg, ctx.jobs);
    write_output(ctx, "model_gbt.json", gbt_text);

    const auto rf = deserialize_model(rf_text);
    const auto gbt = deserialize_model(gbt_text);
    const auto rf_eval = evaluate_model(rf, subset_rows(raw, test));
    const auto selected_test = subset_rows(selected, test);
    const auto gbt_eval = evaluate_model(gbt, selected_test);
    write_evaluation(ctx, "rf", rf_eval);
    write_evaluation(ctx, "gbt", gbt_eval);

    std::string summary = "model,f1_weighted,f1_macro,recall_weighted,recall_macro,accuracy\n";
    for (const auto& [name, e] : {std::pair{"rf", &rf_eval}, std::pair{"gbt", &gbt_eval}}) {
        summary += fmt::format("{},{},{},{},{},{}\n", name, format_double(e->scores.f1_weighted),
                               format_double(e->scores.f1_macro), format_double(e->scores.recall_weighted),
                               format_double(e->scores.recall_macro), format_double(e->scores.accuracy));
    }
    write_output(ctx, "summary.csv", summary);

    if (cfg.importance_repeats > 0) {
        const auto y_test = enc.encode(selected_test.labels);
        const PredictFn fn = [&](const Matrix& X) { return argmax_rows(gbt.predict_proba(X)); };
        const auto importance = permutation_importance(fn, selected_test.X, y_test, enc.classes.size(),
                                                       cfg.importance_repeats, importance_seed(ctx.seed));
        write_output(ctx, "importance_gbt.csv", importance_csv(selected.columns, importance));
    }

    // One example spectrum per class.
    std::set<std::string> plotted;
    for (const auto& s : report.kept.spectra) {
        if (!plotted.insert(s.label).second) continue;
        PlotOptions options;
        options.title = fmt::format("{} ({})", s.id, s.label);
        write_output(ctx, fmt::format("spectrum_{}.svg", s.label), plot_spectrum(s, PlotKind::Combined, options));
    }
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"ecmkit: simulate, filter, classify and fit equivalent-circuit impedance spectra", "ecmkit"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--config,-c", g.config_path, "JSON run configuration");
    g.seed_option = app.add_option("--seed", g.seed, "Master seed (overrides the config and ECMKIT_SEED)");
    app.add_option("--jobs,-j", g.jobs, "Worker threads")->capture_default_str();
    app.add_option("--out,-o", g.out_dir, "Output directory")->capture_default_str();

    std::string format = "native-csv";
    auto* generate = app.add_subcommand("generate", "Generate a synthetic labeled dataset");
    generate->add_option("--format", format, "native-csv | native-jsonl")->capture_default_str();

    InputOptions filter_in;
    std::string filter_mode;
    auto* filter = app.add_subcommand("filter", "Reject unphysical spectra and report why");
    add_input_options(filter, filter_in);
    filter->add_option("--mode", filter_mode, "Real-increase rule: all-pairs | consecutive");

    InputOptions interp_in;
    auto* interp = app.add_subcommand("interp", "Resample spectra onto the common log-frequency grid");
    add_input_options(interp, interp_in);

    InputOptions feat_in;
    bool feat_raw = false;
    auto* featurize = app.add_subcommand("featurize", "Write the engineered (or raw) feature matrix");
    add_input_options(featurize, feat_in);
    featurize->add_flag("--raw", feat_raw, "Max-real normalized impedance columns instead of features");

    std::string select_input;
    auto* select = app.add_subcommand("select", "Keep features that pass the relevance test");
    select->add_option("--input,-i", select_input, "Feature matrix CSV")->required();

    std::string train_input, train_kind = "gbt";
    double train_test_fraction = 0.0;
    auto* train = app.add_subcommand("train", "Train a classifier on a feature matrix");
    train->add_option("--input,-i", train_input, "Feature matrix CSV")->required();
    train->add_option("--model,-m", train_kind, "rf | gbt")->capture_default_str();
    train->add_option("--test-fraction", train_test_fraction, "Hold out a stratified test split and write split.csv");

    std::string eval_model, eval_input, eval_split, eval_name;
    auto* evaluate = app.add_subcommand("evaluate", "Confusion matrix, scores and heatmap for a model");
    evaluate->add_option("--model,-m", eval_model, "Model file")->required();
    evaluate->add_option("--input,-i", eval_input, "Feature matrix CSV")->required();
    evaluate->add_option("--split", eval_split, "Split CSV; only test rows are scored");
    evaluate->add_option("--name", eval_name, "Output name suffix (default: rf or gbt)");

    std::string classify_model;
    InputOptions classify_in;
    auto* classify = app.add_subcommand("classify", "Predict circuit labels for spectra");
    classify->add_option("--model,-m", classify_model, "Model file")->required();
    add_input_options(classify, classify_in);

    InputOptions fit_in;
    std::string fit_labels, fit_circuit;
    auto* fit = app.add_subcommand("fit", "Estimate circuit parameters");
    add_input_options(fit, fit_in);
    fit->add_option("--labels", fit_labels, "predictions.csv from classify");
    fit->add_option("--circuit", fit_circuit, "Use this circuit for every spectrum");

    InputOptions plot_in;
    std::string plot_id, plot_kind = "combined";
    bool plot_fit = false;
    auto* plot = app.add_subcommand("plot", "Nyquist / Bode SVG of one spectrum");
    add_input_options(plot, plot_in);
    plot->add_option("--id", plot_id, "Spectrum id (default: first)");
    plot->add_option("--kind", plot_kind, "nyquist | bode | combined")->capture_default_str();
    plot->add_flag("--fit", plot_fit, "Overlay a fit of the labeled circuit");

    auto* pipeline = app.add_subcommand("pipeline", "generate, filter, interp, featurize, train and evaluate");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        const auto subs = app.get_subcommands();
        out << (subs.empty() ? app.help() : subs.front()->help());
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n";
        const auto subs = app.get_subcommands();
        err << (subs.empty() ? app.help() : subs.front()->help());
        return kExitUsage;
    }

    try {
        const Context ctx = make_context(g, out);
        if (generate->parsed()) return cmd_generate(ctx, format);
        if (filter->parsed()) return cmd_filter(ctx, filter_in, filter_mode);
        if (interp->parsed()) return cmd_interp(ctx, interp_in);
        if (featurize->parsed()) return cmd_featurize(ctx, feat_in, feat_raw);
        if (select->parsed()) return cmd_select(ctx, select_input);
        if (train->parsed()) return cmd_train(ctx, train_input, train_kind, train_test_fraction);
        if (evaluate->parsed()) return cmd_evaluate(ctx, eval_model, eval_input, eval_split, eval_name);
        if (classify->parsed()) return cmd_classify(ctx, classify_model, classify_in);
        if (fit->parsed()) return cmd_fit(ctx, fit_in, fit_labels, fit_circuit);
        if (plot->parsed()) return cmd_plot(ctx, plot_in, plot_id, plot_kind, plot_fit);
        if (pipeline->parsed()) return cmd_pipeline(ctx);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    err << app.help();
    return kExitUsage;
}

}  // namespace ecmkit
