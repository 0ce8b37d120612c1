#include "relrad/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "nlohmann/json.hpp"
#include "relrad/errors.hpp"
#include "relrad/metrics.hpp"
#include "relrad/rng.hpp"
#include "relrad/text.hpp"

namespace relrad {

namespace {

constexpr int kMlpDefaultInput = FeatureLayout::kTotalDim;  // 56
constexpr int kGnnDefaultInput = kNodeFeatureDim;           // 28

double stable_softplus(double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

// Per-node incoming message lists over the bundle's node order. Every edge
// instance contributes one message in each direction, so parallel edges of
// different kinds weigh a neighbor once per edge.
std::vector<std::vector<int>> message_adjacency(const SchemaGraph& g,
                                                const std::vector<std::string>& node_ids,
                                                bool include_fk) {
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < node_ids.size(); ++i)
        index.emplace(node_ids[i], static_cast<int>(i));
    if (static_cast<int>(index.size()) != g.node_count())
        throw ShapeMismatchError("message graph: bundle node list does not cover the graph");

    std::vector<std::vector<int>> adj(node_ids.size());
    for (const auto& e : g.edges()) {
        if (!include_fk && e.kind == EdgeKind::ForeignKey) continue;
        const auto is = index.find(e.src);
        const auto id_ = index.find(e.dst);
        if (is == index.end() || id_ == index.end())
            throw ShapeMismatchError("message graph: edge endpoint missing from node list");
        adj[is->second].push_back(id_->second);
        adj[id_->second].push_back(is->second);
    }
    return adj;
}

Eigen::MatrixXd mean_aggregate(const Eigen::MatrixXd& h,
                               const std::vector<std::vector<int>>& adj) {
    Eigen::MatrixXd agg = Eigen::MatrixXd::Zero(h.rows(), h.cols());
    for (int i = 0; i < h.rows(); ++i) {
        const auto& nbrs = adj[static_cast<std::size_t>(i)];
        if (nbrs.empty()) continue;  // isolated node aggregates the zero vector
        for (const int j : nbrs) agg.row(i) += h.row(j);
        agg.row(i) /= static_cast<double>(nbrs.size());
    }
    return agg;
}

// Transposed backprop of mean_aggregate: routes each node's aggregate
// gradient back to its neighbors, scaled by that node's inverse degree.
void mean_aggregate_backward(const Eigen::MatrixXd& d_agg,
                             const std::vector<std::vector<int>>& adj,
                             Eigen::MatrixXd& d_h) {
    for (int i = 0; i < d_agg.rows(); ++i) {
        const auto& nbrs = adj[static_cast<std::size_t>(i)];
        if (nbrs.empty()) continue;
        const double inv = 1.0 / static_cast<double>(nbrs.size());
        for (const int j : nbrs) d_h.row(j) += d_agg.row(i) * inv;
    }
}

void check_family(const TrainedModel& m, ModelFamily want, const char* op) {
    if (m.spec.family != want)
        throw ConfigError(std::string(op) + ": model family mismatch");
}

int layer_input_dim(const ModelSpec& spec, int layer) {
    const int d = layer == 0 ? spec.effective_input_dim() : spec.hidden_dim;
    return spec.family == ModelFamily::Gnn ? 2 * d : d;
}

void check_parameter_shapes(const TrainedModel& m) {
    const auto& spec = m.spec;
    if (static_cast<int>(m.weights.size()) != spec.depth_k ||
        static_cast<int>(m.biases.size()) != spec.depth_k)
        throw ShapeMismatchError("model: layer count does not match spec depth");
    for (int l = 0; l < spec.depth_k; ++l) {
        if (m.weights[l].rows() != spec.hidden_dim ||
            m.weights[l].cols() != layer_input_dim(spec, l) ||
            m.biases[l].size() != spec.hidden_dim)
            throw ShapeMismatchError("model: layer tensor shape drifted from spec");
    }
    const int head_in = spec.family == ModelFamily::Gnn ? 2 * spec.hidden_dim
                                                        : spec.hidden_dim;
    if (m.head_w.size() != head_in)
        throw ShapeMismatchError("model: head width does not match spec");
}

// GNN forward over all nodes. `acts` (when given) receives the pre-dropout
// ReLU activations per layer; `inputs` the concatenated layer inputs; both
// are needed only by backprop. `masks` applies training-time dropout.
Eigen::MatrixXd gnn_forward_all(const Eigen::MatrixXd& x,
                                const std::vector<std::vector<int>>& adj,
                                const TrainedModel& m,
                                const std::vector<Eigen::MatrixXd>* masks,
                                std::vector<Eigen::MatrixXd>* inputs,
                                std::vector<Eigen::MatrixXd>* acts) {
    Eigen::MatrixXd h = x;
    for (int l = 0; l < m.spec.depth_k; ++l) {
        Eigen::MatrixXd concat(h.rows(), 2 * h.cols());
        concat << h, mean_aggregate(h, adj);
        Eigen::MatrixXd z = concat * m.weights[l].transpose();
        z.rowwise() += m.biases[l].transpose();
        Eigen::MatrixXd a = z.cwiseMax(0.0);
        if (inputs) inputs->push_back(std::move(concat));
        if (acts) acts->push_back(a);
        h = masks ? a.cwiseProduct((*masks)[l]) : std::move(a);
    }
    return h;
}

// MLP forward over a batch of rows; same caching contract as gnn_forward_all.
Eigen::MatrixXd mlp_forward_all(const Eigen::MatrixXd& x, const TrainedModel& m,
                                const std::vector<Eigen::MatrixXd>* masks,
                                std::vector<Eigen::MatrixXd>* inputs,
                                std::vector<Eigen::MatrixXd>* acts) {
    Eigen::MatrixXd h = x;
    for (int l = 0; l < m.spec.depth_k; ++l) {
        Eigen::MatrixXd z = h * m.weights[l].transpose();
        z.rowwise() += m.biases[l].transpose();
        Eigen::MatrixXd a = z.cwiseMax(0.0);
        if (inputs) inputs->push_back(std::move(h));
        if (acts) acts->push_back(a);
        h = masks ? a.cwiseProduct((*masks)[l]) : std::move(a);
    }
    return h;
}

struct AnchorRows {
    std::vector<int> src;
    std::vector<int> dst;
};

AnchorRows anchor_rows(const TaskDataset& ds, const std::vector<std::string>& node_ids) {
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < node_ids.size(); ++i)
        index.emplace(node_ids[i], static_cast<int>(i));
    AnchorRows rows;
    rows.src.reserve(ds.samples.size());
    rows.dst.reserve(ds.samples.size());
    for (const auto& s : ds.samples) {
        const auto a = index.find(s.src);
        const auto b = index.find(s.dst);
        if (a == index.end() || b == index.end())
            throw ShapeMismatchError("bundle node list is missing a sample anchor");
        rows.src.push_back(a->second);
        rows.dst.push_back(b->second);
    }
    return rows;
}

// JSON has no literals for non-finite doubles; represent them as strings.
nlohmann::json json_double(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0.0 ? "inf" : "-inf";
}

double double_from_json(const nlohmann::json& j) {
    if (j.is_number()) return j.get<double>();
    const std::string s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw FormatError("model file: bad double encoding '" + s + "'");
}

nlohmann::ordered_json spec_json(const ModelSpec& s) {
    nlohmann::ordered_json j;
    j["family"] = to_string(s.family);
    j["depth_k"] = s.depth_k;
    j["hidden_dim"] = s.hidden_dim;
    j["dropout"] = s.dropout;
    j["head"] = to_string(s.head);
    j["input_dim"] = s.input_dim;
    return j;
}

ModelSpec spec_from_json(const nlohmann::json& j) {
    ModelSpec s;
    const std::string family = j.at("family").get<std::string>();
    if (family == "mlp")
        s.family = ModelFamily::Mlp;
    else if (family == "gnn")
        s.family = ModelFamily::Gnn;
    else
        throw FormatError("model file: unknown family '" + family + "'");
    s.depth_k = j.at("depth_k").get<int>();
    s.hidden_dim = j.at("hidden_dim").get<int>();
    s.dropout = j.at("dropout").get<double>();
    const std::string head = j.at("head").get<std::string>();
    if (head == "logit")
        s.head = HeadKind::Logit;
    else if (head == "scalar")
        s.head = HeadKind::Scalar;
    else
        throw FormatError("model file: unknown head '" + head + "'");
    s.input_dim = j.at("input_dim").get<int>();
    return s;
}

}  // namespace

const char* to_string(ModelFamily f) {
    return f == ModelFamily::Mlp ? "mlp" : "gnn";
}
const char* to_string(HeadKind h) { return h == HeadKind::Logit ? "logit" : "scalar"; }
const char* to_string(LossKind l) {
    return l == LossKind::WeightedBce ? "weighted_bce" : "mse";
}

int ModelSpec::effective_input_dim() const {
    if (input_dim > 0) return input_dim;
    return family == ModelFamily::Gnn ? kGnnDefaultInput : kMlpDefaultInput;
}

long long ModelSpec::param_count() const {
    const long long h = hidden_dim;
    const long long d0 = effective_input_dim();
    long long total = 0;
    if (family == ModelFamily::Gnn) {
        total += h * (2 * d0) + h;                         // first layer
        total += (depth_k - 1) * (h * (2 * h) + h);        // deeper layers
        total += 2 * h + 1;                                // pair head
    } else {
        total += h * d0 + h;                               // first layer
        total += (depth_k - 1) * (h * h + h);              // deeper layers
        total += h + 1;                                    // head
    }
    return total;
}

ModelSpec default_mlp_spec() {
    ModelSpec s;
    s.family = ModelFamily::Mlp;
    s.depth_k = 2;
    s.hidden_dim = 64;
    s.dropout = 0.2;
    s.head = HeadKind::Logit;
    return s;
}

ModelSpec default_gnn_spec(int depth_k) {
    ModelSpec s;
    s.family = ModelFamily::Gnn;
    s.depth_k = depth_k;
    s.hidden_dim = 64;
    s.dropout = 0.2;
    s.head = HeadKind::Logit;
    return s;
}

void validate(const ModelSpec& spec) {
    if (spec.depth_k < 1) throw ConfigError("model: depth_k must be >= 1");
    if (spec.family == ModelFamily::Gnn && spec.depth_k > 5)
        throw ConfigError("model: gnn depth_k must lie in {1..5}");
    if (spec.hidden_dim < 1) throw ConfigError("model: hidden_dim must be >= 1");
    if (!(spec.dropout >= 0.0 && spec.dropout < 1.0))
        throw ConfigError("model: dropout must lie in [0, 1)");
    if (spec.input_dim < 0) throw ConfigError("model: input_dim must be >= 0");
}

TrainedModel init_model(const ModelSpec& spec, std::uint64_t seed) {
    if (spec.depth_k < 1 || spec.hidden_dim < 1)
        throw ConfigError("model: depth_k and hidden_dim must be >= 1");
    if (!(spec.dropout >= 0.0 && spec.dropout < 1.0))
        throw ConfigError("model: dropout must lie in [0, 1)");

    TrainedModel m;
    m.spec = spec;
    Rng rng(seed);
    for (int l = 0; l < spec.depth_k; ++l) {
        const int in = layer_input_dim(spec, l);
        const int out = spec.hidden_dim;
        const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
        Eigen::MatrixXd w(out, in);
        for (int i = 0; i < out; ++i)
            for (int j = 0; j < in; ++j) w(i, j) = rng.uniform(-limit, limit);
        m.weights.push_back(std::move(w));
        m.biases.push_back(Eigen::VectorXd::Zero(out));
    }
    const int head_in = spec.family == ModelFamily::Gnn ? 2 * spec.hidden_dim
                                                        : spec.hidden_dim;
    const double limit = std::sqrt(6.0 / static_cast<double>(head_in + 1));
    m.head_w.resize(head_in);
    for (int i = 0; i < head_in; ++i) m.head_w(i) = rng.uniform(-limit, limit);
    m.head_b = 0.0;
    return m;
}

FeatureBundle make_feature_bundle(const TaskDataset& ds, bool include_fk) {
    FeatureBundle b;
    b.include_fk = include_fk;
    b.node_ids = ds.graph.node_ids();

    // Node rows are label-free graph preprocessing: scaled over every node.
    const Eigen::MatrixXd raw_nodes = node_feature_matrix(ds.graph);
    MinMaxScaler node_scaler;
    node_scaler.fit(raw_nodes);
    b.node_rows = node_scaler.transform(raw_nodes);

    if (ds.samples.empty()) {
        b.edge_rows.resize(0, kMlpDefaultInput);
        return b;
    }
    if (ds.split.size() != ds.samples.size())
        throw ConfigError("bundle: assign_split before building features");

    bool table_anchors = false;
    for (const auto& s : ds.samples) {
        const bool t1 = ds.graph.node_kind(s.src) == NodeKind::Table;
        const bool t2 = ds.graph.node_kind(s.dst) == NodeKind::Table;
        if (t1 != t2 || (&s != &ds.samples.front() && t1 != table_anchors))
            throw ConfigError("bundle: sample anchors mix tables and attributes");
        table_anchors = t1;
    }

    Eigen::MatrixXd raw;
    if (table_anchors) {
        // Table-pair tasks stack the two endpoint node-feature vectors.
        raw.resize(static_cast<int>(ds.samples.size()), 2 * kNodeFeatureDim);
        for (std::size_t i = 0; i < ds.samples.size(); ++i) {
            const auto fa = node_features(ds.graph, ds.samples[i].src);
            const auto fb = node_features(ds.graph, ds.samples[i].dst);
            for (int j = 0; j < kNodeFeatureDim; ++j) {
                raw(static_cast<int>(i), j) = fa[static_cast<std::size_t>(j)];
                raw(static_cast<int>(i), kNodeFeatureDim + j) =
                    fb[static_cast<std::size_t>(j)];
            }
        }
    } else {
        std::vector<std::pair<std::string, std::string>> pairs;
        pairs.reserve(ds.samples.size());
        for (const auto& s : ds.samples) pairs.emplace_back(s.src, s.dst);
        raw = edge_feature_matrix(ds.graph, pairs);
    }

    // The edge scaler sees training rows only.
    int n_train = 0;
    for (const auto sp : ds.split) n_train += sp == Split::Train;
    if (n_train == 0) throw ConfigError("bundle: empty training split");
    Eigen::MatrixXd train_rows(n_train, raw.cols());
    int r = 0;
    for (std::size_t i = 0; i < ds.split.size(); ++i)
        if (ds.split[i] == Split::Train) train_rows.row(r++) = raw.row(static_cast<int>(i));
    MinMaxScaler scaler;
    scaler.fit(train_rows);
    b.edge_rows = scaler.transform(raw);
    return b;
}

double mlp_forward(const Eigen::VectorXd& edge_feats, const TrainedModel& m) {
    check_family(m, ModelFamily::Mlp, "mlp_forward");
    check_parameter_shapes(m);
    if (edge_feats.size() != m.spec.effective_input_dim())
        throw ShapeMismatchError("mlp_forward: input width does not match spec");
    if (edge_feats.hasNaN()) throw ConfigError("mlp_forward: NaN in input features");

    const Eigen::MatrixXd h =
        mlp_forward_all(edge_feats.transpose(), m, nullptr, nullptr, nullptr);
    return m.head_w.dot(h.row(0)) + m.head_b;
}

Eigen::MatrixXd gnn_embeddings(const SchemaGraph& g, const FeatureBundle& bundle,
                               const TrainedModel& m) {
    check_family(m, ModelFamily::Gnn, "gnn_embeddings");
    check_parameter_shapes(m);
    if (bundle.node_rows.rows() != static_cast<int>(bundle.node_ids.size()) ||
        bundle.node_rows.cols() != m.spec.effective_input_dim())
        throw ShapeMismatchError("gnn_embeddings: node matrix shape does not match");
    if (bundle.node_rows.hasNaN())
        throw ConfigError("gnn_embeddings: NaN in node features");

    const auto adj = message_adjacency(g, bundle.node_ids, bundle.include_fk);
    return gnn_forward_all(bundle.node_rows, adj, m, nullptr, nullptr, nullptr);
}

double gnn_forward(const SchemaGraph& g, const FeatureBundle& bundle,
                   const TrainedModel& m, const std::string& src,
                   const std::string& dst) {
    const Eigen::MatrixXd h = gnn_embeddings(g, bundle, m);
    int si = -1, di = -1;
    for (std::size_t i = 0; i < bundle.node_ids.size(); ++i) {
        if (bundle.node_ids[i] == src) si = static_cast<int>(i);
        if (bundle.node_ids[i] == dst) di = static_cast<int>(i);
    }
    if (si < 0) throw UnknownNodeError(src);
    if (di < 0) throw UnknownNodeError(dst);
    const int hd = m.spec.hidden_dim;
    return m.head_w.head(hd).dot(h.row(si)) + m.head_w.tail(hd).dot(h.row(di)) +
           m.head_b;
}

std::vector<double> predict_scores(const TrainedModel& m, const TaskDataset& ds,
                                   const FeatureBundle& bundle) {
    std::vector<double> out(ds.samples.size(), 0.0);
    if (ds.samples.empty()) return out;
    if (m.spec.family == ModelFamily::Mlp) {
        check_parameter_shapes(m);
        if (bundle.edge_rows.rows() != static_cast<int>(ds.samples.size()) ||
            bundle.edge_rows.cols() != m.spec.effective_input_dim())
            throw ShapeMismatchError("predict: edge rows do not match dataset/spec");
        const Eigen::MatrixXd h =
            mlp_forward_all(bundle.edge_rows, m, nullptr, nullptr, nullptr);
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = m.head_w.dot(h.row(static_cast<int>(i))) + m.head_b;
    } else {
        const Eigen::MatrixXd h = gnn_embeddings(ds.graph, bundle, m);
        const auto rows = anchor_rows(ds, bundle.node_ids);
        const int hd = m.spec.hidden_dim;
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = m.head_w.head(hd).dot(h.row(rows.src[i])) +
                     m.head_w.tail(hd).dot(h.row(rows.dst[i])) + m.head_b;
    }
    return out;
}

namespace {

// Flat views over every parameter tensor so Adam can treat the model as one
// parameter list. Order: weights, biases, head_w, head_b.
struct ParamRefs {
    std::vector<double*> data;
    std::vector<long long> sizes;

    explicit ParamRefs(TrainedModel& m) {
        for (auto& w : m.weights) {
            data.push_back(w.data());
            sizes.push_back(w.size());
        }
        for (auto& b : m.biases) {
            data.push_back(b.data());
            sizes.push_back(b.size());
        }
        data.push_back(m.head_w.data());
        sizes.push_back(m.head_w.size());
        data.push_back(&m.head_b);
        sizes.push_back(1);
    }
};

LossGrad zero_grads(const TrainedModel& m) {
    LossGrad g;
    for (const auto& w : m.weights)
        g.d_weights.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    for (const auto& b : m.biases)
        g.d_biases.push_back(Eigen::VectorXd::Zero(b.size()));
    g.d_head_w = Eigen::VectorXd::Zero(m.head_w.size());
    return g;
}

std::vector<const double*> grad_ptrs(const LossGrad& g) {
    std::vector<const double*> out;
    for (const auto& w : g.d_weights) out.push_back(w.data());
    for (const auto& b : g.d_biases) out.push_back(b.data());
    out.push_back(g.d_head_w.data());
    out.push_back(&g.d_head_b);
    return out;
}

// Full-batch loss and analytic gradient at the model's current parameters.
// The GNN forward covers every node and batch_idx picks the samples entering
// the loss; the MLP forward covers exactly the batch rows. Training epochs
// pass dropout masks; diagnostic callers pass nullptr.
double loss_grad_impl(const TrainedModel& model, const TaskDataset& ds,
                      const FeatureBundle& bundle,
                      const std::vector<std::vector<int>>& adj,
                      const AnchorRows& rows, const std::vector<int>& batch_idx,
                      LossKind loss_kind, double pos_weight,
                      const std::vector<Eigen::MatrixXd>* masks,
                      LossGrad& grads) {
    const ModelSpec& spec = model.spec;
    const bool is_gnn = spec.family == ModelFamily::Gnn;
    const int n_batch = static_cast<int>(batch_idx.size());

    std::vector<Eigen::MatrixXd> inputs, acts;
    Eigen::MatrixXd h;
    if (is_gnn) {
        h = gnn_forward_all(bundle.node_rows, adj, model, masks, &inputs, &acts);
    } else {
        Eigen::MatrixXd batch_in(n_batch, bundle.edge_rows.cols());
        for (int r = 0; r < n_batch; ++r)
            batch_in.row(r) = bundle.edge_rows.row(batch_idx[static_cast<std::size_t>(r)]);
        h = mlp_forward_all(batch_in, model, masks, &inputs, &acts);
    }

    const int hd = spec.hidden_dim;
    std::vector<double> scores(static_cast<std::size_t>(n_batch), 0.0);
    for (int r = 0; r < n_batch; ++r) {
        if (is_gnn) {
            const int i = batch_idx[static_cast<std::size_t>(r)];
            scores[static_cast<std::size_t>(r)] =
                model.head_w.head(hd).dot(h.row(rows.src[static_cast<std::size_t>(i)])) +
                model.head_w.tail(hd).dot(h.row(rows.dst[static_cast<std::size_t>(i)])) +
                model.head_b;
        } else {
            scores[static_cast<std::size_t>(r)] =
                model.head_w.dot(h.row(r)) + model.head_b;
        }
    }

    double loss = 0.0;
    std::vector<double> d_score(static_cast<std::size_t>(n_batch), 0.0);
    for (int r = 0; r < n_batch; ++r) {
        const double y =
            ds.samples[static_cast<std::size_t>(batch_idx[static_cast<std::size_t>(r)])].label;
        const double s = scores[static_cast<std::size_t>(r)];
        if (loss_kind == LossKind::WeightedBce) {
            const double yb = y != 0.0 ? 1.0 : 0.0;
            loss += yb * pos_weight * stable_softplus(-s) +
                    (1.0 - yb) * stable_softplus(s);
            d_score[static_cast<std::size_t>(r)] =
                (-yb * pos_weight * sigmoid(-s) + (1.0 - yb) * sigmoid(s)) /
                static_cast<double>(n_batch);
        } else {
            loss += (s - y) * (s - y);
            d_score[static_cast<std::size_t>(r)] =
                2.0 * (s - y) / static_cast<double>(n_batch);
        }
    }
    loss /= static_cast<double>(n_batch);

    Eigen::MatrixXd d_h = Eigen::MatrixXd::Zero(h.rows(), h.cols());
    for (int r = 0; r < n_batch; ++r) {
        const double g = d_score[static_cast<std::size_t>(r)];
        if (is_gnn) {
            const int i = batch_idx[static_cast<std::size_t>(r)];
            const int a = rows.src[static_cast<std::size_t>(i)];
            const int b = rows.dst[static_cast<std::size_t>(i)];
            grads.d_head_w.head(hd) += g * h.row(a).transpose();
            grads.d_head_w.tail(hd) += g * h.row(b).transpose();
            d_h.row(a) += g * model.head_w.head(hd).transpose();
            d_h.row(b) += g * model.head_w.tail(hd).transpose();
        } else {
            grads.d_head_w += g * h.row(r).transpose();
            d_h.row(r) += g * model.head_w.transpose();
        }
        grads.d_head_b += g;
    }

    for (int l = spec.depth_k - 1; l >= 0; --l) {
        if (masks) d_h = d_h.cwiseProduct((*masks)[static_cast<std::size_t>(l)]);
        const Eigen::MatrixXd d_z =
            d_h.cwiseProduct((acts[static_cast<std::size_t>(l)].array() > 0.0)
                                 .cast<double>()
                                 .matrix());
        grads.d_weights[static_cast<std::size_t>(l)] =
            d_z.transpose() * inputs[static_cast<std::size_t>(l)];
        grads.d_biases[static_cast<std::size_t>(l)] = d_z.colwise().sum();
        const Eigen::MatrixXd d_in = d_z * model.weights[static_cast<std::size_t>(l)];
        if (l == 0) break;
        if (is_gnn) {
            const int d = spec.hidden_dim;
            d_h = d_in.leftCols(d);
            mean_aggregate_backward(d_in.rightCols(d), adj, d_h);
        } else {
            d_h = d_in;
        }
    }
    grads.loss = loss;
    return loss;
}

}  // namespace

TrainedModel train(const ModelSpec& spec, const TaskDataset& ds,
                   const FeatureBundle& bundle, const TrainingConfig& config) {
    validate(spec);
    if (config.lr <= 0.0) throw ConfigError("train: lr must be positive");
    if (config.weight_decay < 0.0)
        throw ConfigError("train: weight_decay must be >= 0");
    if (config.max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
    if (config.patience < 1) throw ConfigError("train: patience must be >= 1");
    if (ds.split.size() != ds.samples.size() || ds.samples.empty())
        throw ConfigError("train: dataset needs samples with an assigned split");
    if (config.loss == LossKind::WeightedBce) {
        if (ds.kind != TaskKind::Classification)
            throw ConfigError("train: weighted BCE needs a classification dataset");
        if (spec.head != HeadKind::Logit)
            throw ConfigError("train: weighted BCE needs a logit head");
    } else if (spec.head != HeadKind::Scalar) {
        throw ConfigError("train: MSE needs a scalar head");
    }

    std::vector<int> train_idx, val_idx;
    for (std::size_t i = 0; i < ds.split.size(); ++i) {
        if (ds.split[i] == Split::Train) train_idx.push_back(static_cast<int>(i));
        if (ds.split[i] == Split::Val) val_idx.push_back(static_cast<int>(i));
    }
    if (train_idx.empty() || val_idx.empty())
        throw ConfigError("train: both train and val splits must be nonempty");

    const bool is_gnn = spec.family == ModelFamily::Gnn;
    std::vector<std::vector<int>> adj;
    AnchorRows rows;
    if (is_gnn) {
        if (bundle.node_rows.rows() != static_cast<int>(bundle.node_ids.size()) ||
            bundle.node_rows.cols() != spec.effective_input_dim())
            throw ShapeMismatchError("train: node matrix shape does not match spec");
        adj = message_adjacency(ds.graph, bundle.node_ids, bundle.include_fk);
        rows = anchor_rows(ds, bundle.node_ids);
    } else {
        if (bundle.edge_rows.rows() != static_cast<int>(ds.samples.size()) ||
            bundle.edge_rows.cols() != spec.effective_input_dim())
            throw ShapeMismatchError("train: edge rows do not match dataset/spec");
    }

    // Class weight for the positive class: explicit, or train-split
    // n_neg / n_pos when auto.
    double pos_weight = 1.0;
    if (config.loss == LossKind::WeightedBce) {
        if (config.class_weight > 0.0) {
            pos_weight = config.class_weight;
        } else {
            long long pos = 0;
            for (const int i : train_idx)
                pos += ds.samples[static_cast<std::size_t>(i)].label != 0.0;
            const long long neg = static_cast<long long>(train_idx.size()) - pos;
            if (pos == 0)
                throw DegenerateLabelsError("train: no positive training samples");
            pos_weight = static_cast<double>(neg) / static_cast<double>(pos);
        }
    }

    TrainedModel model = init_model(spec, config.seed);
    const ParamRefs params(model);

    // Adam state, flat per tensor.
    std::vector<std::vector<double>> adam_m, adam_v;
    for (const auto n : params.sizes) {
        adam_m.emplace_back(static_cast<std::size_t>(n), 0.0);
        adam_v.emplace_back(static_cast<std::size_t>(n), 0.0);
    }
    constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;

    // Validation labels for the early-stopping metric.
    std::vector<int> val_labels;
    std::vector<double> val_targets;
    for (const int i : val_idx) {
        const double y = ds.samples[static_cast<std::size_t>(i)].label;
        val_labels.push_back(y != 0.0 ? 1 : 0);
        val_targets.push_back(y);
    }

    const int n_train = static_cast<int>(train_idx.size());
    Rng dropout_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

    TrainedModel best = model;
    double best_metric = -std::numeric_limits<double>::infinity();
    int stale = 0;

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        // Seeded per-epoch dropout masks (inverted dropout: keep/(1-p)).
        std::vector<Eigen::MatrixXd> masks;
        const std::vector<Eigen::MatrixXd>* mask_ptr = nullptr;
        if (spec.dropout > 0.0) {
            auto mask_rng = dropout_rng.fork(static_cast<std::uint64_t>(epoch));
            const int rows_n = is_gnn ? static_cast<int>(bundle.node_ids.size())
                                      : n_train;
            const double keep = 1.0 - spec.dropout;
            for (int l = 0; l < spec.depth_k; ++l) {
                Eigen::MatrixXd mask(rows_n, spec.hidden_dim);
                for (int i = 0; i < rows_n; ++i)
                    for (int j = 0; j < spec.hidden_dim; ++j)
                        mask(i, j) = mask_rng.uniform() < keep ? 1.0 / keep : 0.0;
                masks.push_back(std::move(mask));
            }
            mask_ptr = &masks;
        }

        LossGrad grads = zero_grads(model);
        const double loss = loss_grad_impl(model, ds, bundle, adj, rows, train_idx,
                                           config.loss, pos_weight, mask_ptr, grads);
        if (!std::isfinite(loss))
            throw DivergedError("train: non-finite loss at epoch " +
                                std::to_string(epoch));

        // ---- Adam step with L2 weight decay ---------------------------------
        const auto flat_grads = grad_ptrs(grads);
        const double bc1 = 1.0 - std::pow(kBeta1, epoch);
        const double bc2 = 1.0 - std::pow(kBeta2, epoch);
        for (std::size_t t = 0; t < params.data.size(); ++t) {
            double* p = params.data[t];
            const double* g = flat_grads[t];
            auto& mm = adam_m[t];
            auto& vv = adam_v[t];
            for (long long i = 0; i < params.sizes[t]; ++i) {
                const double gi = g[i] + config.weight_decay * p[i];
                mm[static_cast<std::size_t>(i)] =
                    kBeta1 * mm[static_cast<std::size_t>(i)] + (1.0 - kBeta1) * gi;
                vv[static_cast<std::size_t>(i)] =
                    kBeta2 * vv[static_cast<std::size_t>(i)] + (1.0 - kBeta2) * gi * gi;
                p[i] -= config.lr * (mm[static_cast<std::size_t>(i)] / bc1) /
                        (std::sqrt(vv[static_cast<std::size_t>(i)] / bc2) + kEps);
            }
        }

        // ---- validation metric (inference mode) ------------------------------
        const auto all_scores = predict_scores(model, ds, bundle);
        std::vector<double> val_scores;
        val_scores.reserve(val_idx.size());
        for (const int i : val_idx)
            val_scores.push_back(all_scores[static_cast<std::size_t>(i)]);
        double metric = -std::numeric_limits<double>::infinity();
        try {
            if (config.loss == LossKind::WeightedBce)
                metric = classification_metrics(val_scores, val_labels).at("f1");
            else
                metric = regression_metrics(val_scores, val_targets).at("r2");
        } catch (const Error&) {
            // Degenerate validation labels: treat as no improvement.
        }

        model.history.push_back({epoch, loss, metric});
        if (metric > best_metric) {
            best_metric = metric;
            best = model;          // history travels with the snapshot
            best.best_epoch = epoch;
            stale = 0;
        } else if (++stale >= config.patience) {
            break;
        }
    }

    best.history = std::move(model.history);
    // best_epoch stays 0 when no epoch improved on -inf (degenerate
    // validation); the parameters are then the seeded initialization.
    return best;
}

LossGrad loss_and_gradient(const TrainedModel& m, const TaskDataset& ds,
                           const FeatureBundle& bundle, LossKind loss,
                           double class_weight) {
    check_parameter_shapes(m);
    if (ds.samples.empty())
        throw ConfigError("loss_and_gradient: dataset has no samples");
    if (class_weight <= 0.0)
        throw ConfigError("loss_and_gradient: class_weight must be positive");
    if (loss == LossKind::WeightedBce && ds.kind != TaskKind::Classification)
        throw ConfigError("loss_and_gradient: weighted BCE needs a classification dataset");

    std::vector<int> batch;
    if (!ds.split.empty()) {
        if (ds.split.size() != ds.samples.size())
            throw ConfigError("loss_and_gradient: split is not parallel to samples");
        for (std::size_t i = 0; i < ds.split.size(); ++i)
            if (ds.split[i] == Split::Train) batch.push_back(static_cast<int>(i));
    } else {
        for (std::size_t i = 0; i < ds.samples.size(); ++i)
            batch.push_back(static_cast<int>(i));
    }
    if (batch.empty()) throw ConfigError("loss_and_gradient: empty training batch");

    const bool is_gnn = m.spec.family == ModelFamily::Gnn;
    std::vector<std::vector<int>> adj;
    AnchorRows rows;
    if (is_gnn) {
        if (bundle.node_rows.rows() != static_cast<int>(bundle.node_ids.size()) ||
            bundle.node_rows.cols() != m.spec.effective_input_dim())
            throw ShapeMismatchError("loss_and_gradient: node matrix shape does not match spec");
        adj = message_adjacency(ds.graph, bundle.node_ids, bundle.include_fk);
        rows = anchor_rows(ds, bundle.node_ids);
    } else if (bundle.edge_rows.rows() != static_cast<int>(ds.samples.size()) ||
               bundle.edge_rows.cols() != m.spec.effective_input_dim()) {
        throw ShapeMismatchError("loss_and_gradient: edge rows do not match dataset/spec");
    }

    LossGrad grads = zero_grads(m);
    loss_grad_impl(m, ds, bundle, adj, rows, batch, loss, class_weight, nullptr, grads);
    return grads;
}

ModelSpec match_capacity(const ModelSpec& reference, ModelFamily target_family) {
    const long long target = reference.param_count();
    if (reference.family == target_family) return reference;

    ModelSpec candidate = reference;
    candidate.family = target_family;
    candidate.input_dim = 0;  // target family default
    const double lo = 0.95 * static_cast<double>(target);
    const double hi = 1.05 * static_cast<double>(target);
    for (int h = 1; h <= 1 << 20; ++h) {
        candidate.hidden_dim = h;
        const auto pc = static_cast<double>(candidate.param_count());
        if (pc >= lo && pc <= hi) return candidate;
        if (pc > hi) break;  // param_count grows monotonically in width
    }
    throw InfeasibleParamsError("match_capacity: no hidden width lands within 5% of " +
                                std::to_string(target) + " parameters");
}

void save_model(const TrainedModel& m, const std::string& path) {
    check_parameter_shapes(m);
    nlohmann::ordered_json header;
    header["version"] = 1;
    header["spec"] = spec_json(m.spec);
    header["best_epoch"] = m.best_epoch;
    auto hist = nlohmann::ordered_json::array();
    for (const auto& e : m.history)
        hist.push_back({{"epoch", e.epoch},
                        {"train_loss", json_double(e.train_loss)},
                        {"val_metric", json_double(e.val_metric)}});
    header["history"] = std::move(hist);

    const std::string head = header.dump();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("save_model: cannot open '" + path + "'");
    out.write("RRMODEL1", 8);
    const auto len = static_cast<std::uint32_t>(head.size());
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    const auto write_block = [&out](const double* data, long long n) {
        out.write(reinterpret_cast<const char*>(data),
                  static_cast<std::streamsize>(n * static_cast<long long>(sizeof(double))));
    };
    using RowMajor =
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    for (const auto& w : m.weights) {
        const RowMajor rm = w;
        write_block(rm.data(), rm.size());
    }
    for (const auto& b : m.biases) write_block(b.data(), b.size());
    write_block(m.head_w.data(), m.head_w.size());
    write_block(&m.head_b, 1);
    if (!out) throw FormatError("save_model: short write to '" + path + "'");
}

TrainedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("load_model: cannot open '" + path + "'");
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, "RRMODEL1", 8) != 0)
        throw FormatError("load_model: bad magic in '" + path + "'");
    std::uint32_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof len);
    if (!in) throw FormatError("load_model: truncated header length");
    std::string head(len, '\0');
    in.read(head.data(), len);
    if (!in) throw FormatError("load_model: truncated header");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(head);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("load_model: bad header json: ") + e.what());
    }
    TrainedModel m;
    try {
        if (header.at("version").get<int>() != 1)
            throw FormatError("load_model: unsupported version");
        m.spec = spec_from_json(header.at("spec"));
        m.best_epoch = header.at("best_epoch").get<int>();
        for (const auto& e : header.at("history"))
            m.history.push_back({e.at("epoch").get<int>(),
                                 double_from_json(e.at("train_loss")),
                                 double_from_json(e.at("val_metric"))});
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("load_model: bad header fields: ") + e.what());
    }

    for (int l = 0; l < m.spec.depth_k; ++l) {
        m.weights.emplace_back(m.spec.hidden_dim, layer_input_dim(m.spec, l));
        m.biases.emplace_back(m.spec.hidden_dim);
    }
    const int head_in = m.spec.family == ModelFamily::Gnn ? 2 * m.spec.hidden_dim
                                                          : m.spec.hidden_dim;
    m.head_w.resize(head_in);
    const auto read_block = [&in, &path](double* data, long long n) {
        in.read(reinterpret_cast<char*>(data),
                static_cast<std::streamsize>(n * static_cast<long long>(sizeof(double))));
        if (!in) throw FormatError("load_model: truncated tensor data in '" + path + "'");
    };
    using RowMajor =
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    for (auto& w : m.weights) {
        RowMajor rm(w.rows(), w.cols());
        read_block(rm.data(), rm.size());
        w = rm;
    }
    for (auto& b : m.biases) read_block(b.data(), b.size());
    read_block(m.head_w.data(), m.head_w.size());
    read_block(&m.head_b, 1);
    return m;
}

std::string history_csv(const TrainedModel& m) {
    std::string out = "epoch,train_loss,val_metric\n";
    for (const auto& e : m.history) {
        out += std::to_string(e.epoch);
        out += ',';
        out += fmt_double(e.train_loss);
        out += ',';
        out += fmt_double(e.val_metric);
        out += '\n';
    }
    return out;
}

}  // namespace relrad
