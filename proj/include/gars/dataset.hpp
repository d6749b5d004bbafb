#ifndef GARS_DATASET_HPP_
#define GARS_DATASET_HPP_

#include <optional>
#include <string>
#include <vector>

#include "gars/types.hpp"

namespace gars {

struct PairLabel {
    int j = 0;
    int k = 0;
    int label = 0;
};

/// Judge probability vectors for the ordered pairs of one context. Missing pairs
/// are flagged; complete tables are required for judge-as-features. Row-major so
/// a pair's probabilities are contiguous.
class JudgeTable {
public:
    using Storage = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    JudgeTable(int K, int C)
        : K_(K), probs_(Storage::Zero(K * K, C)), present_(K * K, false) {}

    void set(int j, int k, const VectorXd& p) {
        probs_.row(j * K_ + k) = p.transpose();
        present_[j * K_ + k] = true;
    }
    bool has(int j, int k) const { return present_[j * K_ + k]; }
    const double* probs_ptr(int j, int k) const { return probs_.row(j * K_ + k).data(); }
    Eigen::Map<const Eigen::RowVectorXd> probs(int j, int k) const {
        return {probs_.row(j * K_ + k).data(), probs_.cols()};
    }
    bool complete() const {
        for (int j = 0; j < K_; ++j)
            for (int k = 0; k < K_; ++k)
                if (j != k && !present_[j * K_ + k]) return false;
        return true;
    }

private:
    int K_;
    Storage probs_;
    std::vector<bool> present_;
};

struct DatasetRow {
    std::vector<PairLabel> pairs;
    std::optional<JudgeTable> judge;
};

/// Observed data: contexts, selected ordered pairs with categorical labels, and
/// optional judge probabilities.
struct PreferenceDataset {
    ItemSet items{2};
    CategoryScheme scheme{CategoryScheme::defaults(2)};
    MatrixXd contexts;            // n x p
    std::vector<DatasetRow> rows; // size n

    int n() const { return static_cast<int>(contexts.rows()); }
    int p() const { return static_cast<int>(contexts.cols()); }
    int K() const { return items.K; }
    int C() const { return scheme.C; }

    bool has_judge() const;
    /// Every row has a judge table covering all ordered pairs.
    bool judge_complete() const;
    std::size_t total_selected() const;

    void validate() const;
};

PreferenceDataset load_dataset(const std::string& path);
void save_dataset(const PreferenceDataset& ds, const std::string& path);

}  // namespace gars

#endif  // GARS_DATASET_HPP_
