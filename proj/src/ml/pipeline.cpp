#include "clinproj/ml/pipeline.hpp"

#include <fstream>
#include <functional>

#include "clinproj/ml/smote.hpp"
#include "clinproj/psv.hpp"
#include "clinproj/rng.hpp"
#include "json.hpp"

namespace clinproj::ml {

using nlohmann::json;

Eigen::VectorXd build_features(const SubPatient& sp, const Eigen::VectorXd* trust) {
    const Eigen::Index V = sp.data.rows(), W = sp.data.cols();
    Eigen::Index dim = V * W + (trust ? V : 0) + 4;
    Eigen::VectorXd f(dim);
    Eigen::Index at = 0;
    for (Eigen::Index v = 0; v < V; ++v)
        for (Eigen::Index t = 0; t < W; ++t) f[at++] = sp.data(v, t);
    if (trust)
        for (Eigen::Index v = 0; v < V; ++v) f[at++] = (*trust)[v];
    f[at++] = sp.age / 100.0;
    f[at++] = sp.gender;
    f[at++] = sp.sofa;
    f[at++] = sp.sirs;
    return f;
}

PipelineModel train_pipeline(const Eigen::MatrixXd& X, const std::vector<int>& y,
                             const PipelineParams& params, std::uint64_t seed) {
    if (static_cast<std::size_t>(X.rows()) != y.size())
        throw TrainError("train_pipeline: X/y size mismatch");

    PipelineModel model;
    model.seed = seed;
    model.params = params;

    ResampleResult rs;
    try {
        rs = resample(X, y, params.minority_frac, params.smote_k, seed);
    } catch (const std::invalid_argument& e) {
        throw TrainError(std::string("train_pipeline: resampling failed: ") + e.what());
    }
    Eigen::MatrixXd Xr = rs.matrix(X);
    std::vector<int> yr = rs.labels(y);

    long global_pos = 0;
    for (int l : yr) global_pos += l;
    double global_rate = static_cast<double>(global_pos) / static_cast<double>(yr.size());

    int k = std::min<int>(params.k, static_cast<int>(Xr.rows()));
    model.clusters = kmeans_fit(Xr, k, params.kmeans_restarts, seed + 1);
    std::vector<int> assign = kmeans_assign_all(model.clusters, Xr);

    model.units.resize(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) {
        std::vector<Eigen::Index> members;
        for (std::size_t i = 0; i < assign.size(); ++i)
            if (assign[i] == c) members.push_back(static_cast<Eigen::Index>(i));
        ClusterUnit& unit = model.units[static_cast<std::size_t>(c)];

        long pos = 0;
        for (auto i : members) pos += yr[static_cast<std::size_t>(i)];
        if (members.empty() || pos == 0 || pos == static_cast<long>(members.size())) {
            unit.constant = true;
            unit.constant_prob = global_rate;
            unit.threshold = 0.5;
            model.notes.push_back("cluster " + std::to_string(c) +
                                  ": single-class after resampling, constant majority model");
            continue;
        }
        Eigen::MatrixXd Xc(static_cast<Eigen::Index>(members.size()), Xr.cols());
        std::vector<int> yc(members.size());
        for (std::size_t i = 0; i < members.size(); ++i) {
            Xc.row(static_cast<Eigen::Index>(i)) = Xr.row(members[i]);
            yc[i] = yr[static_cast<std::size_t>(members[i])];
        }
        unit.model = gbt_train(Xc, yc, params.gbt);
        std::vector<double> probs(members.size());
        for (std::size_t i = 0; i < members.size(); ++i)
            probs[i] = unit.model.predict_prob(Xc.row(static_cast<Eigen::Index>(i)).transpose());
        unit.threshold = select_threshold(probs, yc, params.threshold_grid);
    }
    return model;
}

Prediction predict(const PipelineModel& model, const Eigen::VectorXd& features) {
    Prediction out;
    out.cluster = model.clusters.assign(features);
    const ClusterUnit& unit = model.units[static_cast<std::size_t>(out.cluster)];
    out.probability = unit.constant ? unit.constant_prob : unit.model.predict_prob(features);
    out.label = out.probability >= unit.threshold ? 1 : 0;
    return out;
}

namespace {

json tree_to_json(const Tree& tree, int node) {
    const TreeNode& n = tree.nodes[static_cast<std::size_t>(node)];
    if (n.is_leaf()) return json{{"value", n.value}};
    return json{{"feature", n.feature},
                {"threshold", n.threshold},
                {"left", tree_to_json(tree, n.left)},
                {"right", tree_to_json(tree, n.right)}};
}

int tree_from_json(const json& j, Tree& tree) {
    int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (j.contains("value")) {
        tree.nodes[static_cast<std::size_t>(id)].value = j["value"].get<double>();
        return id;
    }
    tree.nodes[static_cast<std::size_t>(id)].feature = j["feature"].get<int>();
    tree.nodes[static_cast<std::size_t>(id)].threshold = j["threshold"].get<double>();
    int l = tree_from_json(j["left"], tree);
    int r = tree_from_json(j["right"], tree);
    tree.nodes[static_cast<std::size_t>(id)].left = l;
    tree.nodes[static_cast<std::size_t>(id)].right = r;
    return id;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Eigen::VectorXd vector_from_json(const json& a) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
    return v;
}

json model_to_json(const PipelineModel& m) {
    json j;
    j["schema_version"] = m.schema_version;
    j["registry_fingerprint"] = m.registry_fingerprint;
    j["window"] = m.window;
    j["with_trust"] = m.with_trust;
    j["seed"] = m.seed;
    j["params"] = {{"k", m.params.k},
                   {"minority_frac", m.params.minority_frac},
                   {"smote_k", m.params.smote_k},
                   {"kmeans_restarts", m.params.kmeans_restarts},
                   {"threshold_grid", m.params.threshold_grid},
                   {"gbt", {{"depth", m.params.gbt.depth},
                            {"rounds", m.params.gbt.rounds},
                            {"learning_rate", m.params.gbt.learning_rate},
                            {"min_child_weight", m.params.gbt.min_child_weight},
                            {"reg_lambda", m.params.gbt.reg_lambda}}}};
    if (m.with_trust) {
        j["trust_stats"] = {{"lo", vector_to_json(m.trust_stats.lo)},
                            {"hi", vector_to_json(m.trust_stats.hi)}};
    }
    json centers = json::array();
    for (Eigen::Index c = 0; c < m.clusters.centers.rows(); ++c)
        centers.push_back(vector_to_json(m.clusters.centers.row(c).transpose()));
    j["centers"] = centers;
    json units = json::array();
    for (const auto& u : m.units) {
        json uj;
        uj["threshold"] = u.threshold;
        if (u.constant) {
            uj["constant_prob"] = u.constant_prob;
        } else {
            uj["base_margin"] = u.model.base_margin;
            uj["learning_rate"] = u.model.params.learning_rate;
            json trees = json::array();
            for (const auto& t : u.model.trees) trees.push_back(tree_to_json(t, 0));
            uj["trees"] = std::move(trees);
            uj["split_count"] = u.model.split_count;
            uj["total_gain"] = u.model.total_gain;
        }
        units.push_back(std::move(uj));
    }
    j["units"] = std::move(units);
    j["notes"] = m.notes;
    return j;
}

}  // namespace

std::uint64_t PipelineModel::manifest_hash() const {
    std::string bytes = model_to_json(*this).dump();
    return fnv1a(bytes.data(), bytes.size());
}

void save_model(const std::string& path, const PipelineModel& model) {
    json j = model_to_json(model);
    j["manifest_hash"] = model.manifest_hash();
    std::ofstream out(path);
    if (!out) throw TrainError("cannot write model artifact: " + path);
    out << j.dump(1) << '\n';
}

PipelineModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw TrainError("cannot open model artifact: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw TrainError("malformed model artifact " + path + ": " + e.what());
    }
    PipelineModel m;
    try {
        m.schema_version = j.at("schema_version").get<int>();
        m.registry_fingerprint = j.at("registry_fingerprint").get<std::uint64_t>();
        m.window = j.at("window").get<int>();
        m.with_trust = j.at("with_trust").get<bool>();
        m.seed = j.at("seed").get<std::uint64_t>();
        const auto& p = j.at("params");
        m.params.k = p.at("k").get<int>();
        m.params.minority_frac = p.at("minority_frac").get<double>();
        m.params.smote_k = p.at("smote_k").get<int>();
        m.params.kmeans_restarts = p.at("kmeans_restarts").get<int>();
        m.params.threshold_grid = p.at("threshold_grid").get<double>();
        const auto& g = p.at("gbt");
        m.params.gbt.depth = g.at("depth").get<int>();
        m.params.gbt.rounds = g.at("rounds").get<int>();
        m.params.gbt.learning_rate = g.at("learning_rate").get<double>();
        m.params.gbt.min_child_weight = g.at("min_child_weight").get<double>();
        m.params.gbt.reg_lambda = g.at("reg_lambda").get<double>();
        if (m.with_trust) {
            m.trust_stats.lo = vector_from_json(j.at("trust_stats").at("lo"));
            m.trust_stats.hi = vector_from_json(j.at("trust_stats").at("hi"));
        }
        const auto& centers = j.at("centers");
        if (!centers.empty()) {
            m.clusters.centers.resize(static_cast<Eigen::Index>(centers.size()),
                                      static_cast<Eigen::Index>(centers[0].size()));
            for (std::size_t c = 0; c < centers.size(); ++c)
                m.clusters.centers.row(static_cast<Eigen::Index>(c)) =
                    vector_from_json(centers[c]).transpose();
        }
        for (const auto& uj : j.at("units")) {
            ClusterUnit u;
            u.threshold = uj.at("threshold").get<double>();
            if (uj.contains("constant_prob")) {
                u.constant = true;
                u.constant_prob = uj["constant_prob"].get<double>();
            } else {
                u.model.base_margin = uj.at("base_margin").get<double>();
                u.model.params = m.params.gbt;
                u.model.params.learning_rate = uj.at("learning_rate").get<double>();
                for (const auto& tj : uj.at("trees")) {
                    Tree t;
                    tree_from_json(tj, t);
                    u.model.trees.push_back(std::move(t));
                }
                u.model.split_count = uj.at("split_count").get<std::vector<long>>();
                u.model.total_gain = uj.at("total_gain").get<std::vector<double>>();
            }
            m.units.push_back(std::move(u));
        }
        m.notes = j.at("notes").get<std::vector<std::string>>();
        if (j.contains("manifest_hash") &&
            j["manifest_hash"].get<std::uint64_t>() != m.manifest_hash())
            throw TrainError("model artifact " + path + ": manifest hash mismatch");
    } catch (const json::exception& e) {
        throw TrainError("model artifact " + path + ": " + e.what());
    }
    return m;
}

Metrics sofa_baseline(const std::vector<SubPatient>& subpatients) {
    std::vector<double> scores;
    std::vector<int> preds, labels;
    scores.reserve(subpatients.size());
    for (const auto& sp : subpatients) {
        scores.push_back(static_cast<double>(sp.sofa));
        preds.push_back(sp.sofa >= 2 ? 1 : 0);
        labels.push_back(sp.label);
    }
    return evaluate(scores, preds, labels);
}

std::optional<double> time_to_detection(const PipelineModel& model, const PatientRecord& imputed,
                                        const VitalRegistry& registry, const ConstraintSet& phys,
                                        int window, int stride, const SolverOptions& opts,
                                        double onset_hour) {
    std::vector<SubPatient> subs = make_subpatients(imputed, registry, window, stride);
    for (const auto& sp : subs) {
        ProjectionResult proj = project_physical(sp.data, phys, opts);
        SubPatient corrected = sp;
        corrected.data = proj.corrected;
        Eigen::VectorXd trust;
        if (model.with_trust) trust = model.trust_stats.apply(normal_distances(proj.corrected));
        Eigen::VectorXd f = build_features(corrected, model.with_trust ? &trust : nullptr);
        if (predict(model, f).label)
            return onset_hour - static_cast<double>(sp.window_start + window);
    }
    return std::nullopt;
}

}  // namespace clinproj::ml
