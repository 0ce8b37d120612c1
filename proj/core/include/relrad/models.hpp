#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "relrad/features.hpp"
#include "relrad/graph.hpp"
#include "relrad/tasks.hpp"

namespace relrad {

enum class ModelFamily { Mlp, Gnn };
enum class HeadKind { Logit, Scalar };
enum class LossKind { WeightedBce, Mse };

const char* to_string(ModelFamily f);
const char* to_string(HeadKind h);
const char* to_string(LossKind l);

// Architecture description. depth_k counts GNN message-passing layers or MLP
// hidden layers. input_dim = 0 defers to the family default: 56 (edge
// features, and also two stacked 28-dim node vectors for table-pair tasks)
// for MLPs, 28 (node features) for GNNs.
struct ModelSpec {
    ModelFamily family = ModelFamily::Mlp;
    int depth_k = 2;
    int hidden_dim = 64;
    double dropout = 0.2;
    HeadKind head = HeadKind::Logit;
    int input_dim = 0;

    int effective_input_dim() const;

    // Exact trainable-parameter count.
    //   Gnn: sum over layers of hidden*(2*d_l) + hidden with d_0 = input and
    //        d_l = hidden after, plus the 2*hidden+1 pair head.
    //   Mlp: input*hidden + hidden, then (depth_k-1)*(hidden^2 + hidden),
    //        plus the hidden+1 head.
    long long param_count() const;

    bool operator==(const ModelSpec&) const = default;
};

ModelSpec default_mlp_spec();
ModelSpec default_gnn_spec(int depth_k);

// ConfigError on nonsense dims, dropout outside [0,1), or a GNN depth
// outside {1..5} (the training sweep's contract; plain forward passes accept
// any depth >= 1 so diagnostics can probe deeper).
void validate(const ModelSpec& spec);

struct TrainingConfig {
    double lr = 1e-3;
    double weight_decay = 1e-5;
    int max_epochs = 200;
    int patience = 20;
    double class_weight = 0.0;  // 0 = auto (train-split n_neg / n_pos)
    std::uint64_t seed = 0;
    LossKind loss = LossKind::WeightedBce;
};

struct EpochRecord {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_metric = 0.0;
};

// A trained (or freshly initialized) network. Layer l maps its input through
// weights[l] (rows = hidden) plus biases[l]; the head is a single linear map
// to one score. History holds one record per completed epoch; best_epoch is
// the 1-based epoch whose parameters are stored here, or 0 when validation
// stayed degenerate for every epoch (the parameters are then the seeded
// initialization).
struct TrainedModel {
    ModelSpec spec;
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
    Eigen::VectorXd head_w;
    double head_b = 0.0;
    std::vector<EpochRecord> history;
    int best_epoch = 0;
};

// Seeded Xavier-uniform initialization (biases zero). Deterministic.
TrainedModel init_model(const ModelSpec& spec, std::uint64_t seed);

// Model inputs for one dataset. Edge tasks get scaled 56-dim edge-feature
// rows; table-pair tasks get the two endpoint node-feature vectors stacked
// (2 x 28). node_rows covers every graph node in node_ids (sorted) order for
// the message-passing family. include_fk controls whether foreign-key edges
// join the message graph; drop them when the task's labels are the foreign
// keys themselves, mirroring the structural-feature leakage guard.
struct FeatureBundle {
    Eigen::MatrixXd edge_rows;
    Eigen::MatrixXd node_rows;
    std::vector<std::string> node_ids;
    bool include_fk = true;
};

// Builds the bundle for a dataset. The edge-row scaler fits on the training
// split only (pre: split assigned); node rows are label-free graph
// preprocessing and scale over all nodes.
FeatureBundle make_feature_bundle(const TaskDataset& ds, bool include_fk = true);

// Forward passes (inference mode: dropout off). ShapeMismatchError on wrong
// input width; ConfigError on NaN input or family mismatch.
double mlp_forward(const Eigen::VectorXd& edge_feats, const TrainedModel& m);

// All-node embeddings after the model's depth_k rounds of mean-neighbor
// aggregation (self embedding concatenated with the neighbor mean before
// each linear map; isolated nodes aggregate a zero vector).
Eigen::MatrixXd gnn_embeddings(const SchemaGraph& g, const FeatureBundle& bundle,
                               const TrainedModel& m);

// Edge score = head(concat(h_src, h_dst)) over the final embeddings.
double gnn_forward(const SchemaGraph& g, const FeatureBundle& bundle,
                   const TrainedModel& m, const std::string& src,
                   const std::string& dst);

// Scores for every sample in the dataset (logits for classification heads,
// raw reals for scalar heads).
std::vector<double> predict_scores(const TrainedModel& m, const TaskDataset& ds,
                                   const FeatureBundle& bundle);

// Diagnostic surface for the gradient oracle: full-batch loss at the model's
// current parameters together with its analytic gradient (dropout off, no
// weight decay), tensors laid out like TrainedModel. Uses the training split
// when one is assigned, every sample otherwise. class_weight multiplies the
// positive class under WeightedBce (pass the train-split n_neg/n_pos to
// reproduce the auto weighting; ignored for Mse).
struct LossGrad {
    double loss = 0.0;
    std::vector<Eigen::MatrixXd> d_weights;
    std::vector<Eigen::VectorXd> d_biases;
    Eigen::VectorXd d_head_w;
    double d_head_b = 0.0;
};
LossGrad loss_and_gradient(const TrainedModel& m, const TaskDataset& ds,
                           const FeatureBundle& bundle, LossKind loss,
                           double class_weight = 1.0);

// Full-batch Adam training with early stopping on the validation metric (F1
// for WeightedBce, R^2 for Mse). Bit-reproducible given config.seed. Throws
// ConfigError when the split is missing or loss/head/task disagree,
// ShapeMismatchError on bundle/dataset shape drift, DivergedError (with the
// epoch in the message) when the loss leaves the finite range.
TrainedModel train(const ModelSpec& spec, const TaskDataset& ds,
                   const FeatureBundle& bundle, const TrainingConfig& config);

// Smallest hidden width of `target_family` whose param_count lands within
// +-5% of the reference count (depth, dropout, and head carried over; input
// dim reset to the target family default). Returns the reference unchanged
// when it already has the target family. InfeasibleParamsError when no
// width fits the band.
ModelSpec match_capacity(const ModelSpec& reference, ModelFamily target_family);

// Versioned model file: 8-byte magic "RRMODEL1", a little-endian u32 JSON
// header length, the JSON header (spec, best_epoch, history, tensor shapes),
// then every tensor's doubles in row-major little-endian order.
void save_model(const TrainedModel& m, const std::string& path);
TrainedModel load_model(const std::string& path);

// "epoch,train_loss,val_metric" CSV of the training history.
std::string history_csv(const TrainedModel& m);

}  // namespace relrad
