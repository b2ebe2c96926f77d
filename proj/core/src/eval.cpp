#include "binquant/eval.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <random>
#include <unordered_map>

#include "binquant/errors.hpp"

namespace binquant::eval {

namespace {

// Uniform row access over real and binary embeddings; binary rows are cast
// to +-1 reals.
class VectorSource {
public:
    explicit VectorSource(const EmbeddingMatrix& e) : real_(&e) {}
    explicit VectorSource(const BinaryEmbedding& b) : binary_(&b) {}

    const std::vector<std::string>& vocab() const {
        return real_ != nullptr ? real_->vocab() : binary_->vocab();
    }

    std::size_t size() const { return vocab().size(); }

    Eigen::Index dim() const {
        return real_ != nullptr ? real_->dim()
                                : static_cast<Eigen::Index>(binary_->code_bits());
    }

    Eigen::VectorXd row(std::size_t i) const {
        return real_ != nullptr ? Eigen::VectorXd(real_->data().row(i).transpose())
                                : binary_->row_signs(i);
    }

    // Mean vector over the full vocabulary.
    Eigen::VectorXd mean() const {
        if (real_ != nullptr) {
            return real_->data().colwise().mean();
        }
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(dim());
        for (std::size_t i = 0; i < binary_->size(); ++i) {
            acc += binary_->row_signs(i);
        }
        return acc / static_cast<double>(binary_->size());
    }

private:
    const EmbeddingMatrix* real_ = nullptr;
    const BinaryEmbedding* binary_ = nullptr;
};

std::unordered_map<std::string_view, std::size_t> token_index(
    const std::vector<std::string>& vocab) {
    std::unordered_map<std::string_view, std::size_t> index;
    index.reserve(vocab.size());
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        index.emplace(vocab[i], i);
    }
    return index;
}

std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t m = values.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(m);
    std::size_t i = 0;
    while (i < m) {
        std::size_t j = i;
        while (j + 1 < m && values[order[j + 1]] == values[order[i]]) {
            ++j;
        }
        // Positions i..j (0-based) share the mean of ranks i+1..j+1.
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) {
            ranks[order[t]] = rank;
        }
        i = j + 1;
    }
    return ranks;
}

double pearson(std::span<const double> a, std::span<const double> b) {
    const double m = static_cast<double>(a.size());
    double mean_a = 0.0;
    double mean_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        mean_a += a[i];
        mean_b += b[i];
    }
    mean_a /= m;
    mean_b /= m;
    double cov = 0.0;
    double var_a = 0.0;
    double var_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - mean_a;
        const double db = b[i] - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if (var_a == 0.0 || var_b == 0.0) {
        throw DegenerateError("correlation undefined for a constant list");
    }
    return cov / std::sqrt(var_a * var_b);
}

struct KmeansRun {
    double wcss = std::numeric_limits<double>::infinity();
    std::vector<int> assignments;
};

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// One seeded k-means++ initialization followed by Lloyd iterations.
KmeansRun lloyd_kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed) {
    const Eigen::Index n = points.rows();
    std::mt19937_64 rng(seed);
    Eigen::MatrixXd centers(k, points.cols());

    std::vector<char> chosen(static_cast<std::size_t>(n), 0);
    const Eigen::Index first = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n));
    centers.row(0) = points.row(first);
    chosen[static_cast<std::size_t>(first)] = 1;

    Eigen::VectorXd dist2 =
        (points.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
        const double total = dist2.sum();
        Eigen::Index pick = -1;
        if (total > 0.0) {
            const double target = uniform01(rng) * total;
            double cum = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                cum += dist2(i);
                if (cum > target && dist2(i) > 0.0) {
                    pick = i;
                    break;
                }
            }
            if (pick < 0) {
                for (Eigen::Index i = n - 1; i >= 0; --i) {
                    if (dist2(i) > 0.0) {
                        pick = i;
                        break;
                    }
                }
            }
        }
        if (pick < 0) {
            // Remaining mass is zero (duplicate points); take the first free index.
            for (Eigen::Index i = 0; i < n; ++i) {
                if (!chosen[static_cast<std::size_t>(i)]) {
                    pick = i;
                    break;
                }
            }
        }
        centers.row(c) = points.row(pick);
        chosen[static_cast<std::size_t>(pick)] = 1;
        dist2 = dist2.cwiseMin(
            (points.rowwise() - centers.row(c)).rowwise().squaredNorm().eval());
    }

    std::vector<int> assignments(static_cast<std::size_t>(n), 0);
    auto assign_all = [&]() {
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            double best_d = (points.row(i) - centers.row(0)).squaredNorm();
            for (int c = 1; c < k; ++c) {
                const double d = (points.row(i) - centers.row(c)).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (assignments[static_cast<std::size_t>(i)] != best) {
                assignments[static_cast<std::size_t>(i)] = best;
                changed = true;
            }
        }
        return changed;
    };

    assign_all();
    for (int iter = 0; iter < 100; ++iter) {
        // Recompute centers; empty clusters steal the point farthest from its
        // own center (lowest index on ties).
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
        std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.row(assignments[static_cast<std::size_t>(i)]) += points.row(i);
            ++counts[static_cast<std::size_t>(assignments[static_cast<std::size_t>(i)])];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                centers.row(c) =
                    sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
            }
        }
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                continue;
            }
            Eigen::Index farthest = 0;
            double far_d = -1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const double d =
                    (points.row(i) -
                     centers.row(assignments[static_cast<std::size_t>(i)]))
                        .squaredNorm();
                if (d > far_d) {
                    far_d = d;
                    farthest = i;
                }
            }
            centers.row(c) = points.row(farthest);
            assignments[static_cast<std::size_t>(farthest)] = c;
        }
        if (!assign_all()) {
            break;
        }
    }

    KmeansRun run;
    run.wcss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        run.wcss +=
            (points.row(i) - centers.row(assignments[static_cast<std::size_t>(i)]))
                .squaredNorm();
    }
    run.assignments = std::move(assignments);
    return run;
}

SimilarityResult eval_similarity_impl(const VectorSource& source, const SimilarityDataset& ds) {
    if (ds.pairs.empty()) {
        throw ParameterError("similarity dataset is empty");
    }
    const auto index = token_index(source.vocab());
    Eigen::VectorXd mean;
    bool mean_ready = false;
    auto lookup = [&](const std::string& token, bool& oov) -> Eigen::VectorXd {
        const auto it = index.find(token);
        if (it != index.end()) {
            return source.row(it->second);
        }
        oov = true;
        if (!mean_ready) {
            mean = source.mean();
            mean_ready = true;
        }
        return mean;
    };

    std::vector<double> model;
    std::vector<double> human;
    model.reserve(ds.pairs.size());
    human.reserve(ds.pairs.size());
    std::size_t n_oov = 0;
    for (const auto& pair : ds.pairs) {
        bool oov = false;
        const Eigen::VectorXd x = lookup(pair.word1, oov);
        const Eigen::VectorXd y = lookup(pair.word2, oov);
        model.push_back(cosine_similarity(x, y));
        human.push_back(pair.score);
        n_oov += oov ? 1 : 0;
    }

    if (std::all_of(model.begin(), model.end(),
                    [&](double v) { return v == model.front(); })) {
        throw DegenerateError("all model similarities are identical; ranking undefined");
    }
    return {spearman(model, human), ds.pairs.size(), n_oov};
}

PurityResult kmeans_purity_impl(const VectorSource& source, const CategorizationDataset& ds,
                                int k, std::uint64_t seed, int restarts) {
    const std::size_t n = ds.items.size();
    if (n == 0) {
        throw ParameterError("categorization dataset is empty");
    }
    if (restarts < 1) {
        throw ParameterError("restarts must be at least 1");
    }

    std::unordered_map<std::string_view, int> label_ids;
    std::vector<int> gold(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto [it, inserted] =
            label_ids.emplace(ds.items[i].label, static_cast<int>(label_ids.size()));
        gold[i] = it->second;
    }
    if (k == 0) {
        k = static_cast<int>(label_ids.size());
    }
    if (k < 1) {
        throw ParameterError("cluster count must be at least 1");
    }
    if (static_cast<std::size_t>(k) > n) {
        throw ParameterError("cluster count exceeds the number of dataset words");
    }

    const auto index = token_index(source.vocab());
    Eigen::VectorXd mean;
    bool mean_ready = false;
    Eigen::MatrixXd points(static_cast<Eigen::Index>(n), source.dim());
    for (std::size_t i = 0; i < n; ++i) {
        const auto it = index.find(ds.items[i].word);
        if (it != index.end()) {
            points.row(static_cast<Eigen::Index>(i)) = source.row(it->second).transpose();
        } else {
            if (!mean_ready) {
                mean = source.mean();
                mean_ready = true;
            }
            points.row(static_cast<Eigen::Index>(i)) = mean.transpose();
        }
    }

    std::mt19937_64 master(seed);
    KmeansRun best;
    for (int r = 0; r < restarts; ++r) {
        const std::uint64_t run_seed = master();
        KmeansRun run = lloyd_kmeans(points, k, run_seed);
        if (run.wcss < best.wcss) {
            best = std::move(run);
        }
    }

    std::vector<std::unordered_map<int, std::size_t>> counts(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < n; ++i) {
        ++counts[static_cast<std::size_t>(best.assignments[i])][gold[i]];
    }
    std::size_t correct = 0;
    for (const auto& cluster : counts) {
        std::size_t top = 0;
        for (const auto& [label, count] : cluster) {
            top = std::max(top, count);
        }
        correct += top;
    }
    return {static_cast<double>(correct) / static_cast<double>(n), k,
            std::move(best.assignments)};
}

template <typename Score>
std::vector<Neighbor> rank_neighbors(const std::vector<std::string>& vocab,
                                     std::size_t query, std::size_t k, bool furthest,
                                     Score&& score) {
    if (k < 1 || k > vocab.size() - 1) {
        throw ParameterError("neighbor count must be in [1, n-1]");
    }
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(vocab.size() - 1);
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        if (i == query) {
            continue;
        }
        scored.emplace_back(score(i), i);
    }
    const auto better = [furthest](const std::pair<double, std::size_t>& a,
                                   const std::pair<double, std::size_t>& b) {
        if (a.first != b.first) {
            return furthest ? a.first < b.first : a.first > b.first;
        }
        return a.second < b.second;
    };
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k),
                      scored.end(), better);
    std::vector<Neighbor> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        out.push_back({vocab[scored[i].second], scored[i].first});
    }
    return out;
}

std::size_t find_query(const std::vector<std::string>& vocab, const std::string& token) {
    const auto it = std::find(vocab.begin(), vocab.end(), token);
    if (it == vocab.end()) {
        throw NotFoundError("token not in vocabulary: '" + token + "'");
    }
    return static_cast<std::size_t>(it - vocab.begin());
}

} // namespace

double cosine_similarity(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    if (x.size() != y.size()) {
        throw DimensionError("cosine_similarity: length mismatch");
    }
    const double nx = x.norm();
    const double ny = y.norm();
    if (nx == 0.0 || ny == 0.0) {
        throw DegenerateError("cosine similarity undefined for a zero vector");
    }
    return x.dot(y) / (nx * ny);
}

std::int64_t binary_dot(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b,
                        std::size_t code_bits) {
    if (code_bits == 0) {
        throw ParameterError("binary_dot: code length must be positive");
    }
    const std::size_t bytes = (code_bits + 7) / 8;
    if (a.size() != bytes || b.size() != bytes) {
        throw DimensionError("binary_dot: row length does not match code length");
    }
    const std::size_t full = code_bits % 8 == 0 ? bytes : bytes - 1;
    std::int64_t hamming = 0;
    std::size_t i = 0;
    for (; i + 8 <= full; i += 8) {
        std::uint64_t wa = 0;
        std::uint64_t wb = 0;
        std::memcpy(&wa, a.data() + i, 8);
        std::memcpy(&wb, b.data() + i, 8);
        hamming += std::popcount(wa ^ wb);
    }
    for (; i < full; ++i) {
        hamming += std::popcount(static_cast<unsigned>(a[i] ^ b[i]));
    }
    if (code_bits % 8 != 0) {
        const unsigned mask = (1u << (code_bits % 8)) - 1u;
        hamming += std::popcount(static_cast<unsigned>(a[bytes - 1] ^ b[bytes - 1]) & mask);
    }
    return static_cast<std::int64_t>(code_bits) - 2 * hamming;
}

double spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw DimensionError("spearman: length mismatch");
    }
    if (a.size() < 2) {
        throw ParameterError("spearman: need at least two observations");
    }
    const std::vector<double> ra = average_ranks(a);
    const std::vector<double> rb = average_ranks(b);
    return pearson(ra, rb);
}

SimilarityResult eval_word_similarity(const EmbeddingMatrix& emb, const SimilarityDataset& ds) {
    return eval_similarity_impl(VectorSource(emb), ds);
}

SimilarityResult eval_word_similarity(const BinaryEmbedding& emb, const SimilarityDataset& ds) {
    return eval_similarity_impl(VectorSource(emb), ds);
}

PurityResult kmeans_purity(const EmbeddingMatrix& emb, const CategorizationDataset& ds, int k,
                           std::uint64_t seed, int restarts) {
    return kmeans_purity_impl(VectorSource(emb), ds, k, seed, restarts);
}

PurityResult kmeans_purity(const BinaryEmbedding& emb, const CategorizationDataset& ds, int k,
                           std::uint64_t seed, int restarts) {
    return kmeans_purity_impl(VectorSource(emb), ds, k, seed, restarts);
}

std::vector<Neighbor> nearest_neighbors(const EmbeddingMatrix& emb, const std::string& token,
                                        std::size_t k, bool furthest) {
    const std::size_t query = find_query(emb.vocab(), token);
    const Eigen::VectorXd q = emb.data().row(query).transpose();
    return rank_neighbors(emb.vocab(), query, k, furthest, [&](std::size_t i) {
        return cosine_similarity(q, emb.data().row(i).transpose());
    });
}

std::vector<Neighbor> nearest_neighbors(const BinaryEmbedding& emb, const std::string& token,
                                        std::size_t k, bool furthest) {
    const std::size_t query = find_query(emb.vocab(), token);
    const auto q = emb.row(query);
    return rank_neighbors(emb.vocab(), query, k, furthest, [&](std::size_t i) {
        return static_cast<double>(binary_dot(q, emb.row(i), emb.code_bits()));
    });
}

} // namespace binquant::eval
