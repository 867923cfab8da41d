#include "gramtraj/pipeline.hpp"

#include "gramtraj/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

namespace gramtraj {

namespace {

const char* kModelMagic = "gramtraj-model v1";

int dataset_landmarks(const Dataset& dataset) {
    if (dataset.empty()) throw Error("pipeline: empty dataset");
    const auto n = dataset.front().landmark_count();
    for (const auto& s : dataset) {
        if (s.landmark_count() != n) {
            throw Error("pipeline: sequence '" + s.sequence_id + "' has " +
                        std::to_string(s.landmark_count()) + " landmarks, expected " +
                        std::to_string(n));
        }
    }
    return static_cast<int>(n);
}

Trajectory smooth(const Trajectory& t, const FittingLambda& lambda) {
    if (!lambda || t.size() < 2) return t;
    return resample(fit(t, lambda));
}

std::vector<std::string> kernel_parts(const std::string& name) {
    if (name == "product" || name == "early") return {fusion_regions.begin(), fusion_regions.end()};
    return {name};
}

std::string fixed(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string percent_label(double rate) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g%%", rate * 100.0);
    return buf;
}

double log_similarity(const ModelSample& s, const std::vector<Trajectory>& x,
                      const std::string& kernel, const DeployedModel& m, std::size_t part) {
    if (kernel == "product") {
        return log_gak_from_distances(product_distance_matrix(x, s.trajectories, m.mode), m.sigma);
    }
    return log_gak_similarity(x[part], s.trajectories[part], m.sigma, m.mode);
}

double self_log_similarity(const std::vector<Trajectory>& x, const std::string& kernel,
                           const DeployedModel& m, std::size_t part) {
    if (kernel == "product") {
        return log_gak_from_distances(product_distance_matrix(x, x, m.mode), m.sigma);
    }
    return log_gak_similarity(x[part], x[part], m.sigma, m.mode);
}

ExperimentConfig config_of(const DeployedModel& m) {
    ExperimentConfig c;
    c.sigma = m.sigma;
    c.lambda = m.lambda;
    c.sampling = m.sampling;
    c.distance_mode = m.mode;
    c.normalize_kernel = m.normalize;
    c.scale_normalize = m.scale_normalize;
    c.region_scheme = "custom";
    c.custom_regions = m.regions;
    return c;
}

void require_token(std::istream& in, const std::string& expected) {
    std::string token;
    if (!(in >> token) || token != expected) {
        throw Error("model file: expected '" + expected + "', got '" + token + "'");
    }
}

template <class T>
T read_value(std::istream& in, const std::string& what) {
    T v{};
    if (!(in >> v)) throw Error("model file: cannot read " + what);
    return v;
}

double read_hex(std::istream& in, const std::string& what) {
    return parse_hex_double(read_value<std::string>(in, what));
}

void check_token(const std::string& s, const std::string& what) {
    if (s.empty() || s.find_first_of(" \t\r\n") != std::string::npos) {
        throw Error("model file: " + what + " '" + s + "' is empty or contains whitespace");
    }
}

}  // namespace

Dataset prepare_dataset(const Dataset& raw, const ExperimentConfig& config) {
    switch (config.augmentation) {
        case AugmentationMode::none: return raw;
        case AugmentationMode::below_mean:
            return augment_minority_classes(raw, BelowMeanClassCount{});
        case AugmentationMode::labels:
            return augment_minority_classes(
                raw, ExplicitLabels{{config.augment_labels.begin(), config.augment_labels.end()}});
    }
    return raw;
}

std::vector<Split> make_splits(const Dataset& dataset, const ExperimentConfig& config) {
    return config.protocol == Protocol::loso ? loso_splits(dataset)
                                             : kfold_splits(dataset, config.k);
}

SequenceTrajectories prepare_trajectories(const RawSequence& seq, const ExperimentConfig& config) {
    const auto n = static_cast<int>(seq.landmark_count());
    const auto options = config.trajectory_options();
    auto out = build_trajectories(seq, config.regions_for(n), options);
    auto face = build_trajectories(seq, RegionMap::whole_face(n), options);
    out.insert(face.begin(), face.end());
    for (auto& [name, t] : out) t = smooth(t, config.lambda);
    return out;
}

KernelSpec kernel_spec(const std::string& name, const ExperimentConfig& config,
                       int landmark_count, const std::string& data_hash) {
    KernelSpec spec;
    spec.region = name;
    if (name == "face") {
        spec.indices.resize(static_cast<std::size_t>(landmark_count));
        std::iota(spec.indices.begin(), spec.indices.end(), 0);
    } else {
        const auto regions = config.regions_for(landmark_count);
        for (const auto& part : kernel_parts(name)) {
            const auto& idx = regions.at(part).indices;
            spec.indices.insert(spec.indices.end(), idx.begin(), idx.end());
            spec.indices.push_back(-1);  // part separator
        }
    }
    spec.sigma = config.sigma;
    spec.lambda = config.lambda;
    spec.sampling = config.sampling;
    spec.mode = config.distance_mode;
    spec.normalize = config.normalize_kernel;
    spec.scale_normalize = config.scale_normalize;
    spec.dataset_hash = data_hash;
    return spec;
}

std::string kernel_config_hash(const ExperimentConfig& config, int landmark_count,
                               const std::string& data_hash) {
    std::string all;
    for (const char* name : {"jaw", "nose", "mouth", "eyes", "face", "product"}) {
        all += canonical_key(kernel_spec(name, config, landmark_count, data_hash));
        all += '\n';
    }
    return fnv1a_hex(all);
}

KernelBundle compute_kernels(const Dataset& dataset, const ExperimentConfig& config,
                             const std::vector<std::string>& names, KernelCache* cache) {
    const int n = dataset_landmarks(dataset);
    const std::string data_hash = dataset_hash(dataset);
    std::vector<std::string> ids;
    for (const auto& s : dataset) ids.push_back(s.sequence_id);

    KernelBundle out;
    std::vector<std::string> missing;
    for (const auto& name : names) {
        if (out.count(name)) continue;
        if (cache) {
            if (auto k = cache->load(kernel_spec(name, config, n, data_hash)); k && k->ids == ids) {
                out.emplace(name, std::move(*k));
                continue;
            }
        }
        missing.push_back(name);
    }
    if (missing.empty()) return out;

    std::vector<SequenceTrajectories> trajectories;
    trajectories.reserve(dataset.size());
    for (const auto& s : dataset) trajectories.push_back(prepare_trajectories(s, config));

    const auto options = config.kernel_options();
    for (const auto& name : missing) {
        SimilarityMatrix k;
        if (name == "product") {
            std::vector<std::vector<Trajectory>> parts;
            for (const auto& t : trajectories) {
                std::vector<Trajectory> per;
                for (const auto& r : fusion_regions) per.push_back(t.at(r));
                parts.push_back(std::move(per));
            }
            k = build_product_similarity_matrix(parts, options);
        } else {
            std::vector<Trajectory> list;
            for (const auto& t : trajectories) {
                const auto it = t.find(name);
                if (it == t.end()) throw Error("compute_kernels: unknown kernel '" + name + "'");
                list.push_back(it->second);
            }
            k = build_similarity_matrix(list, options);
        }
        if (cache) cache->store(kernel_spec(name, config, n, data_hash), k);
        out.emplace(name, std::move(k));
    }
    return out;
}

ProtocolOptions protocol_options(const ExperimentConfig& config, Strategy strategy) {
    ProtocolOptions o;
    o.strategy = strategy;
    o.svr = config.svr;
    o.post = {config.clamp, config.label_min, config.label_max};
    return o;
}

ExperimentReport run_experiment(const Dataset& raw, const ExperimentConfig& config,
                                Strategy strategy, KernelCache* cache) {
    const auto dataset = prepare_dataset(raw, config);
    const auto splits = make_splits(dataset, config);
    const auto kernels = compute_kernels(dataset, config, required_kernels(strategy), cache);
    auto report = run_protocol(dataset, splits, kernels, protocol_options(config, strategy));
    report.protocol = config.protocol;
    report.sigma = config.sigma;
    report.lambda = config.lambda;
    report.sampling = config.sampling;
    return report;
}

GridSearchResult run_grid_search(const Dataset& raw, const ExperimentConfig& config,
                                 Strategy strategy, KernelCache* cache) {
    const auto dataset = prepare_dataset(raw, config);
    const auto splits = make_splits(dataset, config);
    const auto names = required_kernels(strategy);
    KernelProvider provider = [&](double sigma, const FittingLambda& lambda, double sampling) {
        auto c = config;
        c.sigma = sigma;
        c.lambda = lambda;
        c.sampling = sampling;
        return compute_kernels(dataset, c, names, cache);
    };
    return grid_search_hyperparams(dataset, splits, config.sigma_grid, config.lambda_grid,
                                   config.sampling_grid, provider,
                                   protocol_options(config, strategy));
}

// ---------------------------------------------------------------- models

DeployedModel train_deployed_model(const Dataset& raw, const ExperimentConfig& config,
                                   Strategy strategy, const FusionWeights& weights,
                                   KernelCache* cache) {
    const auto dataset = prepare_dataset(raw, config);
    const int n = dataset_landmarks(dataset);
    auto kernels = compute_kernels(dataset, config, required_kernels(strategy), cache);

    DeployedModel m;
    m.strategy = strategy;
    m.sigma = config.sigma;
    m.lambda = config.lambda;
    m.sampling = config.sampling;
    m.mode = config.distance_mode;
    m.normalize = config.normalize_kernel;
    m.scale_normalize = config.scale_normalize;
    m.landmark_count = n;
    const auto region_map = config.regions_for(n);
    for (const auto& r : region_map.regions()) m.regions[r.name] = r.indices;
    m.post = protocol_options(config, strategy).post;
    m.weights = weights;
    m.provenance = kernel_config_hash(config, n, dataset_hash(dataset));

    std::vector<std::string> model_kernels;
    if (strategy == Strategy::late) {
        model_kernels = required_kernels(strategy);
    } else if (strategy == Strategy::early) {
        std::vector<SimilarityMatrix> parts;
        for (const auto& r : fusion_regions) parts.push_back(kernels.at(r));
        kernels.emplace("early", early_fuse(parts));
        model_kernels = {"early"};
    } else {
        model_kernels = required_kernels(strategy);
    }

    std::vector<std::string> ids;
    std::vector<double> labels;
    for (const auto& s : dataset) {
        ids.push_back(s.sequence_id);
        labels.push_back(s.label);
    }
    std::map<std::string, const RawSequence*> by_id;
    for (const auto& s : dataset) by_id[s.sequence_id] = &s;

    for (const auto& name : model_kernels) {
        auto trained = train(kernels.at(name), ids, labels, config.svr);
        KernelModel km;
        km.kernel = name;
        km.svr.bias = trained.model.bias;
        km.svr.params = trained.model.params;
        km.svr.region = name;
        km.svr.provenance = m.provenance;
        std::vector<double> beta;
        const auto parts = kernel_parts(name);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (trained.model.beta(static_cast<Eigen::Index>(i)) == 0.0) continue;
            beta.push_back(trained.model.beta(static_cast<Eigen::Index>(i)));
            km.svr.training_ids.push_back(ids[i]);
            const auto traj = prepare_trajectories(*by_id.at(ids[i]), config);
            ModelSample sample;
            sample.sequence_id = ids[i];
            for (const auto& p : parts) sample.trajectories.push_back(traj.at(p));
            km.samples.push_back(std::move(sample));
        }
        km.svr.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
        for (auto& s : km.samples) {
            if (name == "product") {
                s.log_self_similarity.push_back(self_log_similarity(s.trajectories, name, m, 0));
            } else {
                for (std::size_t p = 0; p < parts.size(); ++p) {
                    s.log_self_similarity.push_back(self_log_similarity(s.trajectories, name, m, p));
                }
            }
        }
        m.kernels.push_back(std::move(km));
    }
    return m;
}

double predict_sequence(const DeployedModel& m, const RawSequence& seq) {
    validate_sequence(seq);
    if (seq.landmark_count() != m.landmark_count) {
        throw Error("predict: sequence '" + seq.sequence_id + "' has " +
                    std::to_string(seq.landmark_count()) + " landmarks, model expects " +
                    std::to_string(m.landmark_count));
    }
    const auto traj = prepare_trajectories(seq, config_of(m));
    std::vector<double> outputs;
    for (const auto& km : m.kernels) {
        const auto parts = kernel_parts(km.kernel);
        std::vector<Trajectory> x;
        for (const auto& p : parts) x.push_back(traj.at(p));
        const std::size_t terms = km.kernel == "product" ? 1 : parts.size();
        std::vector<double> x_self;
        for (std::size_t p = 0; p < terms; ++p) {
            x_self.push_back(self_log_similarity(x, km.kernel, m, p));
        }
        std::vector<double> row;
        for (const auto& s : km.samples) {
            double v = 0.0;
            for (std::size_t p = 0; p < terms; ++p) {
                double log_k = log_similarity(s, x, km.kernel, m, p);
                if (m.normalize) log_k -= 0.5 * (x_self[p] + s.log_self_similarity[p]);
                v += std::exp(log_k);
            }
            row.push_back(v / static_cast<double>(terms));
        }
        outputs.push_back(predict(km.svr, row));
    }
    if (m.strategy == Strategy::late) {
        RegionPredictions p{};
        for (std::size_t r = 0; r < 4; ++r) p[r] = outputs.at(r);
        return m.post(late_fuse(p, m.weights));
    }
    return m.post(outputs.at(0));
}

void save_model(const DeployedModel& m, const std::filesystem::path& path) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw Error("save_model: cannot write " + tmp.string());
        out << kModelMagic << "\n"
            << "strategy " << to_string(m.strategy) << "\n"
            << "sigma " << hex_double(m.sigma) << "\n"
            << "lambda " << (m.lambda ? hex_double(*m.lambda) : std::string("none")) << "\n"
            << "sampling " << hex_double(m.sampling) << "\n"
            << "mode " << to_string(m.mode) << "\n"
            << "normalize " << m.normalize << "\n"
            << "scale_normalize " << m.scale_normalize << "\n"
            << "landmarks " << m.landmark_count << "\n"
            << "regions " << m.regions.size() << "\n";
        for (const auto& [name, idx] : m.regions) {
            check_token(name, "region name");
            out << name << " " << idx.size();
            for (int i : idx) out << " " << i;
            out << "\n";
        }
        out << "post " << m.post.clamp << " " << hex_double(m.post.lo) << " "
            << hex_double(m.post.hi) << "\n"
            << "weights";
        for (double w : m.weights.values) out << " " << hex_double(w);
        out << "\n"
            << "provenance " << m.provenance << "\n"
            << "kernels " << m.kernels.size() << "\n";
        for (const auto& km : m.kernels) {
            const auto& p = km.svr.params;
            out << "kernel " << km.kernel << "\n"
                << "svr " << hex_double(p.C) << " " << hex_double(p.epsilon) << " "
                << hex_double(p.tol) << " " << p.max_iter << "\n"
                << "bias " << hex_double(km.svr.bias) << "\n"
                << "samples " << km.samples.size() << "\n";
            for (std::size_t i = 0; i < km.samples.size(); ++i) {
                const auto& s = km.samples[i];
                check_token(s.sequence_id, "sequence id");
                out << "sample " << s.sequence_id << " "
                    << hex_double(km.svr.beta(static_cast<Eigen::Index>(i))) << " "
                    << s.log_self_similarity.size();
                for (double v : s.log_self_similarity) out << " " << hex_double(v);
                out << " " << s.trajectories.size() << "\n";
                for (const auto& t : s.trajectories) {
                    const auto rows = t.points.empty() ? 0 : t.points.front().rows();
                    out << "trajectory " << t.region << " " << t.points.size() << " " << rows
                        << "\n";
                    for (const auto& f : t.points) {
                        const auto& a = f.matrix();
                        for (Eigen::Index r = 0; r < a.rows(); ++r) {
                            out << (r ? " " : "") << hex_double(a(r, 0)) << " "
                                << hex_double(a(r, 1));
                        }
                        out << "\n";
                    }
                }
            }
        }
        out << "end\n";
        if (!out) throw Error("save_model: write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

DeployedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("load_model: cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kModelMagic) {
        throw Error("load_model: " + path.string() + " is not a model file");
    }
    try {
        DeployedModel m;
        require_token(in, "strategy");
        m.strategy = parse_strategy(read_value<std::string>(in, "strategy"));
        require_token(in, "sigma");
        m.sigma = read_hex(in, "sigma");
        require_token(in, "lambda");
        const auto lambda = read_value<std::string>(in, "lambda");
        if (lambda != "none") m.lambda = parse_hex_double(lambda);
        require_token(in, "sampling");
        m.sampling = read_hex(in, "sampling");
        require_token(in, "mode");
        m.mode = parse_distance_mode(read_value<std::string>(in, "mode"));
        require_token(in, "normalize");
        m.normalize = read_value<int>(in, "normalize") != 0;
        require_token(in, "scale_normalize");
        m.scale_normalize = read_value<int>(in, "scale_normalize") != 0;
        require_token(in, "landmarks");
        m.landmark_count = read_value<int>(in, "landmarks");
        require_token(in, "regions");
        const auto region_count = read_value<std::size_t>(in, "region count");
        for (std::size_t r = 0; r < region_count; ++r) {
            const auto name = read_value<std::string>(in, "region name");
            const auto count = read_value<std::size_t>(in, "region size");
            auto& idx = m.regions[name];
            for (std::size_t i = 0; i < count; ++i) idx.push_back(read_value<int>(in, "index"));
        }
        require_token(in, "post");
        m.post.clamp = read_value<int>(in, "clamp") != 0;
        m.post.lo = read_hex(in, "label_min");
        m.post.hi = read_hex(in, "label_max");
        require_token(in, "weights");
        for (double& w : m.weights.values) w = read_hex(in, "weight");
        require_token(in, "provenance");
        m.provenance = read_value<std::string>(in, "provenance");
        require_token(in, "kernels");
        const auto kernel_count = read_value<std::size_t>(in, "kernel count");
        for (std::size_t k = 0; k < kernel_count; ++k) {
            KernelModel km;
            require_token(in, "kernel");
            km.kernel = read_value<std::string>(in, "kernel name");
            require_token(in, "svr");
            km.svr.params.C = read_hex(in, "C");
            km.svr.params.epsilon = read_hex(in, "epsilon");
            km.svr.params.tol = read_hex(in, "tol");
            km.svr.params.max_iter = read_value<long>(in, "max_iter");
            require_token(in, "bias");
            km.svr.bias = read_hex(in, "bias");
            km.svr.region = km.kernel;
            km.svr.provenance = m.provenance;
            require_token(in, "samples");
            const auto count = read_value<std::size_t>(in, "sample count");
            km.svr.beta.resize(static_cast<Eigen::Index>(count));
            for (std::size_t i = 0; i < count; ++i) {
                ModelSample s;
                require_token(in, "sample");
                s.sequence_id = read_value<std::string>(in, "sample id");
                km.svr.beta(static_cast<Eigen::Index>(i)) = read_hex(in, "beta");
                const auto selfs = read_value<std::size_t>(in, "self count");
                for (std::size_t j = 0; j < selfs; ++j) {
                    s.log_self_similarity.push_back(read_hex(in, "self similarity"));
                }
                const auto trajs = read_value<std::size_t>(in, "trajectory count");
                for (std::size_t j = 0; j < trajs; ++j) {
                    Trajectory t;
                    require_token(in, "trajectory");
                    t.region = read_value<std::string>(in, "trajectory region");
                    t.sequence_id = s.sequence_id;
                    const auto points = read_value<std::size_t>(in, "point count");
                    const auto rows = read_value<Eigen::Index>(in, "row count");
                    for (std::size_t q = 0; q < points; ++q) {
                        FactorMatrix a(rows, 2);
                        for (Eigen::Index r = 0; r < rows; ++r) {
                            a(r, 0) = read_hex(in, "factor entry");
                            a(r, 1) = read_hex(in, "factor entry");
                        }
                        t.points.emplace_back(a);
                        t.times.push_back(static_cast<double>(q));
                    }
                    s.trajectories.push_back(std::move(t));
                }
                km.svr.training_ids.push_back(s.sequence_id);
                km.samples.push_back(std::move(s));
            }
            m.kernels.push_back(std::move(km));
        }
        require_token(in, "end");
        return m;
    } catch (const Error& e) {
        throw Error("load_model: " + path.string() + ": " + e.what());
    }
}

// --------------------------------------------------------------- reports

std::string protocol_label(Protocol protocol, int folds) {
    if (protocol == Protocol::loso) return "LOSO cross validation";
    return std::to_string(folds) + "-fold cross validation";
}

std::string setup_label(Strategy strategy, bool augmented) {
    std::string label;
    switch (strategy) {
        case Strategy::whole_face: label = "Whole Face"; break;
        case Strategy::product: label = "Cartesian product"; break;
        case Strategy::early: label = "Early fusion"; break;
        case Strategy::late: label = "Late fusion"; break;
    }
    return augmented ? label + " - augmented" : label;
}

void write_predictions_csv(std::ostream& out, const ExperimentReport& report) {
    out << "sequence_id,subject_id,label,prediction,fold\n";
    for (const auto& p : report.predictions) {
        out << p.sequence_id << "," << p.subject_id << "," << format_decimal(p.label) << ","
            << format_decimal(p.prediction) << "," << p.fold << "\n";
    }
}

void write_folds_csv(std::ostream& out, const ExperimentReport& report) {
    out << "fold,test_subjects,validation_subjects,validation_mae,baseline_prediction,"
           "w_jaw,w_nose,w_mouth,w_eyes,svr_converged\n";
    auto join = [](const std::vector<std::string>& v) {
        std::string s;
        for (const auto& x : v) s += (s.empty() ? "" : ";") + x;
        return s;
    };
    for (const auto& f : report.folds) {
        out << f.fold << "," << join(f.test_subjects) << "," << join(f.validation_subjects) << ","
            << format_decimal(f.validation_mae) << "," << format_decimal(f.baseline_prediction);
        for (std::size_t r = 0; r < 4; ++r) {
            out << "," << (f.weights ? format_decimal(f.weights->values[r]) : std::string());
        }
        out << "," << (f.svr_converged ? "true" : "false") << "\n";
    }
}

void write_summary_csv(std::ostream& out, const ExperimentReport& r, int k) {
    const int folds = static_cast<int>(r.folds.size());
    out << "key,value\n"
        << "strategy," << to_string(r.strategy) << "\n"
        << "regression_setup," << setup_label(r.strategy, r.augmented) << "\n"
        << "protocol," << to_string(r.protocol) << "\n"
        << "protocol_label," << protocol_label(r.protocol, folds) << "\n";
    if (r.protocol == Protocol::kfold) out << "k," << k << "\n";
    out << "folds," << folds << "\n"
        << "sigma," << format_decimal(r.sigma) << "\n"
        << "lambda," << lambda_to_string(r.lambda) << "\n"
        << "sampling," << format_decimal(r.sampling) << "\n"
        << "augmented," << (r.augmented ? "true" : "false") << "\n"
        << "test_sequences," << r.predictions.size() << "\n"
        << "mae," << format_decimal(r.mae) << "\n"
        << "rmse," << format_decimal(r.rmse) << "\n"
        << "baseline_mae," << format_decimal(r.baseline_mae) << "\n"
        << "validation_mae," << format_decimal(r.validation_mae) << "\n";
    for (const auto& [level, e] : r.per_intensity) {
        out << "mae_intensity_" << level << "," << format_decimal(e.mae) << "\n"
            << "count_intensity_" << level << "," << e.count << "\n";
    }
}

void write_grid_table_csv(std::ostream& out, const GridSearchResult& result) {
    std::vector<double> samplings;
    std::vector<std::pair<double, FittingLambda>> rows;
    for (const auto& c : result.table) {
        if (std::find(samplings.begin(), samplings.end(), c.sampling) == samplings.end()) {
            samplings.push_back(c.sampling);
        }
        const std::pair<double, FittingLambda> key{c.sigma, c.lambda};
        if (std::find(rows.begin(), rows.end(), key) == rows.end()) rows.push_back(key);
    }
    std::sort(samplings.begin(), samplings.end());
    out << "sigma,lambda";
    for (double s : samplings) out << "," << percent_label(s);
    out << ",best_sampling,best_overall\n";
    const auto& best = result.best_cell();
    for (const auto& [sigma, lambda] : rows) {
        out << format_decimal(sigma) << ","
            << (lambda ? format_decimal(*lambda) : std::string("No fitting"));
        double row_best = std::numeric_limits<double>::infinity();
        std::string row_best_label;
        for (double s : samplings) {
            const GridCell* cell = nullptr;
            for (const auto& c : result.table) {
                if (c.sigma == sigma && c.lambda == lambda && c.sampling == s) cell = &c;
            }
            out << ",";
            if (cell) {
                out << fixed(cell->validation_mae);
                if (cell->validation_mae < row_best) {
                    row_best = cell->validation_mae;
                    row_best_label = percent_label(s);
                }
            }
        }
        const bool has_best = best.sigma == sigma && best.lambda == lambda;
        out << "," << row_best_label << "," << (has_best ? percent_label(best.sampling) : "")
            << "\n";
    }
}

void write_comparison_csv(std::ostream& out, const std::vector<ExperimentReport>& reports) {
    out << "protocol,regression_setup,mae,rmse\n";
    for (const auto& r : reports) {
        out << protocol_label(r.protocol, static_cast<int>(r.folds.size())) << ","
            << setup_label(r.strategy, r.augmented) << "," << fixed(r.mae, 4) << ","
            << fixed(r.rmse, 4) << "\n";
    }
}

}  // namespace gramtraj
