#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "flsentry/defense.hpp"
#include "flsentry/engine.hpp"
#include "flsentry/metrics.hpp"
#include "flsentry/prover.hpp"
#include "flsentry/threat.hpp"
#include "flsentry/verifier.hpp"

namespace flsentry {

enum class DefenseKind { none, two_stage, krum, m_krum, rfa, foolsgold };

std::string defense_kind_name(DefenseKind kind);
DefenseKind defense_kind_from_name(const std::string& name);

struct DataConfig {
    enum class Source { blobs, idx };
    Source source = Source::blobs;
    int n_classes = 3;
    int n_features = 20;
    int n_samples = 2000;
    double test_fraction = 0.2;
    std::string images_path;
    std::string labels_path;
};

struct ScenarioConfig {
    std::uint64_t seed = 1;
    std::string output_dir = "out/run";
    bool verify = false;
    TrainConfig train;
    DataConfig data;
    PartitionSpec partition;
    ThreatPlan threat;
    std::optional<BackdoorSpec> backdoor;
    DefenseKind defense = DefenseKind::two_stage;
    DefenseParams defense_params;
    ZkParams zk;

    void validate() const;
};

ScenarioConfig config_from_yaml(const std::string& text);
ScenarioConfig load_config(const std::filesystem::path& path);
/// Fully-resolved echo, including every default.
std::string config_to_yaml(const ScenarioConfig& cfg);

/// Steps a configured federation round by round: local training, attack
/// injection, the configured defense, aggregation, cache renewal, and (for
/// the two-stage defense with verify on) transcript generation plus
/// client-side verification.
class Simulation {
public:
    explicit Simulation(const ScenarioConfig& cfg);

    struct RoundOutcome {
        int round = 0;
        DetectionReport report;
        std::set<int> removed;  // defense-specific removal (non-kept for Krum)
        std::set<int> attacked; // ground truth, for metrics only
        bool quarantined = false;
        ParamVector global;
        ParamVector plain_mean; // uniform mean of every submission this round
        Evaluation eval;
        std::optional<VerificationTranscript> transcript;
        std::optional<VerifyResult> verification;
    };

    RoundOutcome run_round();

    const ScenarioConfig& config() const { return cfg_; }
    const ModelSpec& model_spec() const { return spec_; }
    const ParamVector& global() const { return global_; }
    const LabeledDataset& testset() const { return testset_; }
    const LabeledDataset& shard(std::size_t i) const { return shards_[i]; }
    const ReferenceCache& cache() const { return cache_; }
    int next_round() const { return round_; }

    /// Full-batch gradient layer norms of every client at the current global
    /// model (layer-sensitivity probe).
    std::vector<std::vector<std::pair<std::string, double>>> probe_layer_norms() const;

private:
    ScenarioConfig cfg_;
    ModelSpec spec_;
    std::vector<LabeledDataset> shards_;
    std::map<int, LabeledDataset> poisoned_shards_;
    LabeledDataset testset_;
    LabeledDataset trigger_testset_;
    ParamVector global_;
    ReferenceCache cache_;
    std::map<int, ParamVector> foolsgold_history_;
    ZkChainState chain_;
    PublicInputs public_inputs_;
    int round_ = 0;

    std::vector<ClientUpdate> collect_updates(int round, std::set<int>* attacked);
    void refresh_cache(const std::vector<ClientUpdate>& updates,
                       const std::vector<std::size_t>& survivors, const ParamVector& new_global);
};

struct RoundRecord {
    int round = 0;
    double accuracy = 0.0;
    std::optional<double> backdoor_success;
    bool attack_actual = false;
    bool attack_flag = false;
    std::size_t n_removed = 0;
    std::optional<double> ppv_running;
    std::optional<std::uint64_t> mult_count;
    bool quarantined = false;
};

struct ScenarioResult {
    std::vector<RoundRecord> rounds;
    ConfusionTally tally;
    double final_accuracy = 0.0;
    std::optional<double> final_backdoor_success;
    std::optional<double> ppv;
    double success_rate = 0.0;
    int quarantined_rounds = 0;
    int verified_rounds = 0;
    int marginal_rounds = 0;
    bool all_transcripts_verified = true;
    std::filesystem::path output_dir;
};

/// Runs every round, writes rounds.csv / reports.ndjson / transcripts /
/// summary.json under the scenario's output directory, and returns the
/// summary. Output files are written once and renamed into place.
ScenarioResult run_scenario(const ScenarioConfig& cfg);

struct ComparisonRow {
    std::string defense;
    double final_accuracy = 0.0;
    std::optional<double> ppv;
    double success_rate = 0.0;
};

/// One scenario per defense on shared seeds; emits comparison.csv.
std::vector<ComparisonRow> compare_defenses(const ScenarioConfig& base,
                                            const std::vector<DefenseKind>& defenses);

struct SensitivityResult {
    // (round, client, layer, norm) plus the fraction of (round, client) pairs
    // whose second-to-last layer norm ranks above the per-pair median.
    std::vector<std::tuple<int, int, std::string, double>> rows;
    double above_median_fraction = 0.0;
};

/// Benign training probe of per-layer gradient norms; writes sensitivity.csv.
SensitivityResult run_sensitivity(const ScenarioConfig& cfg);

/// Resolves the scenario output directory, honoring FLSENTRY_OUTPUT_ROOT.
std::filesystem::path resolve_output_dir(const std::string& configured);

/// Writes `content` to `path` atomically (temp file + rename).
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

} // namespace flsentry
