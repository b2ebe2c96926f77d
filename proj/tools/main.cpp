// binquant command-line front end: compression, isotropy metrics, and
// evaluation of word embeddings as reproducible batch jobs.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "binquant/errors.hpp"
#include "binquant/eval.hpp"
#include "binquant/io.hpp"
#include "binquant/isotropy.hpp"
#include "binquant/quantizer.hpp"

namespace {

namespace fs = std::filesystem;
using binquant::BinaryEmbedding;
using binquant::EmbeddingMatrix;

std::string fmt(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", value);
    return buf;
}

void apply_thread_cap() {
    const char* raw = std::getenv("BINQUANT_THREADS");
    if (raw == nullptr) {
        return;
    }
    char* end = nullptr;
    const long threads = std::strtol(raw, &end, 10);
    if (end != raw && *end == '\0' && threads >= 1) {
        Eigen::setNbThreads(static_cast<int>(threads));
    }
}

struct CompressOptions {
    std::string method;
    std::string input;
    std::string output;
    int remove_top = -1;
    int iterations = 50;
    int out_dim = 0;
    std::uint64_t seed = 0;
    std::string loss_curve;
};

int run_compress(const CompressOptions& opt) {
    binquant::quantizer::CompressionConfig config;
    config.method = opt.method == "iiq" ? binquant::quantizer::Method::IIQ
                                        : binquant::quantizer::Method::ITQ;
    if (config.method == binquant::quantizer::Method::IIQ && opt.remove_top < 0) {
        std::cerr << "compress: --remove-top is required for method iiq "
                     "(no general rule exists; see --help for reference values)\n";
        return 2;
    }
    config.remove_top = std::max(opt.remove_top, 0);
    config.iterations = opt.iterations;
    config.out_dim = opt.out_dim;
    config.seed = opt.seed;

    if (binquant::io::is_packed_file(opt.input)) {
        std::cerr << "compress: input must be a text embedding, not a packed one\n";
        return 2;
    }
    const EmbeddingMatrix embedding = binquant::io::load_text_embedding(opt.input);
    const auto result = binquant::quantizer::compress(embedding, config);

    // Stage outputs next to their targets and rename once everything is
    // written, so failures never leave partial files.
    const fs::path out_path(opt.output);
    const fs::path out_tmp = out_path.string() + ".tmp";
    const fs::path curve_path(opt.loss_curve);
    const fs::path curve_tmp = curve_path.string() + ".tmp";
    try {
        binquant::io::save_packed(result.embedding, out_tmp);
        if (!opt.loss_curve.empty()) {
            binquant::quantizer::save_loss_curve(result.trace.losses, curve_tmp);
        }
    } catch (...) {
        std::error_code ec;
        fs::remove(out_tmp, ec);
        fs::remove(curve_tmp, ec);
        throw;
    }
    fs::rename(out_tmp, out_path);
    if (!opt.loss_curve.empty()) {
        fs::rename(curve_tmp, curve_path);
    }

    std::cerr << "compressed " << embedding.size() << "x" << embedding.dim() << " -> "
              << result.embedding.code_bits() << " bits/word (" << opt.method << ", "
              << opt.iterations << " iterations)\n";
    return 0;
}

int run_isotropy(const std::string& input) {
    const EmbeddingMatrix embedding = binquant::io::load_text_embedding(input);
    const auto report = binquant::isotropy::report(embedding.data());
    std::cout << "i_ratio\t" << fmt(report.i_ratio) << "\n"
              << "i_quadratic\t" << fmt(report.i_quadratic) << "\n"
              << "sigma_min\t" << fmt(report.sigma_min) << "\n"
              << "sigma_max\t" << fmt(report.sigma_max) << "\n"
              << "mean_norm\t" << fmt(report.mean_norm) << "\n"
              << "degenerate\t" << (report.degenerate ? 1 : 0) << "\n";
    return 0;
}

template <typename F>
auto with_embedding(const std::string& path, F&& f) {
    if (binquant::io::is_packed_file(path)) {
        return f(binquant::io::load_packed(path));
    }
    return f(binquant::io::load_text_embedding(path));
}

int run_eval_sim(const std::string& embedding_path, const std::string& dataset_path) {
    const auto dataset = binquant::io::load_similarity_dataset(dataset_path);
    const auto result = with_embedding(embedding_path, [&](const auto& emb) {
        return binquant::eval::eval_word_similarity(emb, dataset);
    });
    std::cout << dataset_path << '\t' << fmt(result.rho) << '\t' << result.n_pairs << '\t'
              << result.n_oov << '\n';
    return 0;
}

int run_eval_cat(const std::string& embedding_path, const std::string& dataset_path, int k,
                 std::uint64_t seed, int restarts) {
    const auto dataset = binquant::io::load_categorization_dataset(dataset_path);
    const auto result = with_embedding(embedding_path, [&](const auto& emb) {
        return binquant::eval::kmeans_purity(emb, dataset, k, seed, restarts);
    });
    std::cout << dataset_path << '\t' << fmt(result.purity) << '\t' << result.k << '\n';
    return 0;
}

int run_neighbors(const std::string& embedding_path, const std::string& word, std::size_t k,
                  bool furthest) {
    if (binquant::io::is_packed_file(embedding_path)) {
        const BinaryEmbedding emb = binquant::io::load_packed(embedding_path);
        for (const auto& neighbor : binquant::eval::nearest_neighbors(emb, word, k, furthest)) {
            std::cout << neighbor.token << '\t'
                      << static_cast<long long>(neighbor.score) << '\n';
        }
    } else {
        const EmbeddingMatrix emb = binquant::io::load_text_embedding(embedding_path);
        for (const auto& neighbor : binquant::eval::nearest_neighbors(emb, word, k, furthest)) {
            std::cout << neighbor.token << '\t' << fmt(neighbor.score) << '\n';
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    apply_thread_cap();

    CLI::App app{"binquant: binary quantization and evaluation of word embeddings"};
    app.require_subcommand(1);

    CompressOptions copt;
    auto* compress = app.add_subcommand(
        "compress", "Compress a text embedding into packed binary codes");
    compress->add_option("--method", copt.method, "Quantizer: iiq or itq")
        ->required()
        ->check(CLI::IsMember({"iiq", "itq"}));
    compress->add_option("--input", copt.input, "Input text embedding")->required();
    compress->add_option("--output", copt.output, "Output packed embedding")->required();
    compress->add_option("--remove-top", copt.remove_top,
                         "Top singular values removed before quantization (required for iiq; "
                         "reference values: 2 for HDC, 14 for GloVe)");
    compress->add_option("--iters", copt.iterations, "Alternating-minimization iterations")
        ->capture_default_str();
    compress->add_option("--out-dim", copt.out_dim,
                         "Output code length in bits (default: input dimension)");
    compress->add_option("--seed", copt.seed, "Seed for all randomness")
        ->capture_default_str();
    compress->add_option("--loss-curve", copt.loss_curve,
                         "Write the per-iteration loss trace to this CSV file");

    std::string iso_input;
    auto* isotropy = app.add_subcommand("isotropy", "Report isotropy metrics of an embedding");
    isotropy->add_option("--input", iso_input, "Input text embedding")->required();

    std::string sim_embedding;
    std::string sim_dataset;
    auto* eval_sim = app.add_subcommand("eval-sim", "Word-similarity evaluation (Spearman)");
    eval_sim->add_option("--embedding", sim_embedding, "Text or packed embedding")->required();
    eval_sim->add_option("--dataset", sim_dataset, "word1<TAB>word2<TAB>score lines")
        ->required();

    std::string cat_embedding;
    std::string cat_dataset;
    int cat_k = 0;
    std::uint64_t cat_seed = 0;
    int cat_restarts = 10;
    auto* eval_cat = app.add_subcommand("eval-cat", "Categorization evaluation (purity)");
    eval_cat->add_option("--embedding", cat_embedding, "Text or packed embedding")->required();
    eval_cat->add_option("--dataset", cat_dataset, "word<TAB>label lines")->required();
    eval_cat->add_option("--k", cat_k, "Cluster count (default: number of gold categories)");
    eval_cat->add_option("--seed", cat_seed, "Seed for k-means")->capture_default_str();
    eval_cat->add_option("--restarts", cat_restarts, "k-means restarts")->capture_default_str();

    std::string nn_embedding;
    std::string nn_word;
    std::size_t nn_k = 10;
    bool nn_furthest = false;
    auto* neighbors = app.add_subcommand("neighbors", "Rank tokens by similarity to a word");
    neighbors->add_option("--embedding", nn_embedding, "Text or packed embedding")->required();
    neighbors->add_option("--word", nn_word, "Query token")->required();
    neighbors->add_option("--k", nn_k, "Number of neighbors")->capture_default_str();
    neighbors->add_flag("--furthest", nn_furthest, "Rank from the bottom instead");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (compress->parsed()) {
            return run_compress(copt);
        }
        if (isotropy->parsed()) {
            return run_isotropy(iso_input);
        }
        if (eval_sim->parsed()) {
            return run_eval_sim(sim_embedding, sim_dataset);
        }
        if (eval_cat->parsed()) {
            return run_eval_cat(cat_embedding, cat_dataset, cat_k, cat_seed, cat_restarts);
        }
        if (neighbors->parsed()) {
            return run_neighbors(nn_embedding, nn_word, nn_k, nn_furthest);
        }
    } catch (const binquant::NumericError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const binquant::RangeError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const binquant::DegenerateError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const binquant::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
