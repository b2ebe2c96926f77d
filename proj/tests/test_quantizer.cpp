#include <doctest.h>

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "binquant/errors.hpp"
#include "binquant/isotropy.hpp"
#include "binquant/quantizer.hpp"
#include "support/oracles.hpp"
#include "support/testutil.hpp"

using namespace binquant;
using quantizer::CompressionConfig;
using quantizer::Method;

namespace {

Eigen::MatrixXd naive_sign(const Eigen::MatrixXd& m) {
    Eigen::MatrixXd out(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            out(i, j) = m(i, j) >= 0.0 ? 1.0 : -1.0;
        }
    }
    return out;
}

double naive_loss(const Eigen::MatrixXd& codes, const Eigen::MatrixXd& rotated) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < codes.rows(); ++i) {
        for (Eigen::Index j = 0; j < codes.cols(); ++j) {
            const double diff = codes(i, j) - rotated(i, j);
            acc += diff * diff;
        }
    }
    return acc;
}

void check_non_increasing(const std::vector<double>& losses) {
    for (std::size_t i = 1; i < losses.size(); ++i) {
        CHECK(losses[i] <= losses[i - 1] + 1e-9);
    }
}

EmbeddingMatrix random_embedding(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
    return {testutil::make_vocab(static_cast<std::size_t>(n)),
            oracles::gaussian_matrix(n, d, seed)};
}

} // namespace

TEST_CASE("sign_matrix is total with sgn(0) = +1") {
    Eigen::MatrixXd m(2, 3);
    m << -0.5, 0.0, 2.0, -0.0, 1e-300, -1e-300;
    const Eigen::MatrixXd s = quantizer::sign_matrix(m);
    CHECK(s(0, 0) == -1.0);
    CHECK(s(0, 1) == 1.0);   // sgn(0) = +1
    CHECK(s(0, 2) == 1.0);
    CHECK(s(1, 0) == 1.0);   // -0.0 counts as zero
    CHECK(s(1, 1) == 1.0);
    CHECK(s(1, 2) == -1.0);
}

TEST_CASE("remove_top_singular") {
    const Eigen::MatrixXd x = oracles::naive_center(oracles::gaussian_matrix(40, 8, 61));

    SUBCASE("count 0 is the identity") {
        CHECK((quantizer::remove_top_singular(x, 0) - x).norm() <= 1e-8);
    }
    SUBCASE("count min(n,d) zeroes everything") {
        CHECK(quantizer::remove_top_singular(x, 8).norm() <= 1e-8 * x.norm());
    }
    SUBCASE("spectrum after removal matches the svd oracle") {
        const Eigen::MatrixXd trimmed = quantizer::remove_top_singular(x, 2);
        const auto before = oracles::svd_via_jacobi(x);
        const auto after = oracles::svd_via_jacobi(trimmed);
        // descending order: sigma_3..sigma_8 of the input, then two zeros
        for (Eigen::Index i = 0; i < 6; ++i) {
            CHECK(after.sigma(i) == doctest::Approx(before.sigma(i + 2)).epsilon(1e-8));
        }
        CHECK(after.sigma(6) <= 1e-8 * before.sigma(0));
        CHECK(after.sigma(7) <= 1e-8 * before.sigma(0));
        // Frobenius mass drops by exactly the removed components
        const double removed = before.sigma(0) * before.sigma(0) +
                               before.sigma(1) * before.sigma(1);
        CHECK(x.squaredNorm() - trimmed.squaredNorm() ==
              doctest::Approx(removed).epsilon(1e-6));
        // output is still column-zero-mean
        CHECK(trimmed.colwise().sum().norm() <=
              1e-8 * static_cast<double>(x.rows()) * x.cwiseAbs().maxCoeff());
    }
    SUBCASE("count out of range") {
        CHECK_THROWS_AS(quantizer::remove_top_singular(x, -1), ParameterError);
        CHECK_THROWS_AS(quantizer::remove_top_singular(x, 9), ParameterError);
    }
}

TEST_CASE("itq_projection maximizes the bit-variance objective") {
    const Eigen::MatrixXd x = oracles::naive_center(oracles::gaussian_matrix(60, 10, 62));
    const double n = static_cast<double>(x.rows());
    const auto oracle = oracles::svd_via_jacobi(x);

    SUBCASE("full dimension preserves the trace") {
        const auto p = quantizer::itq_projection(x, 10);
        const double objective =
            (p.basis.transpose() * x.transpose() * x * p.basis).trace() / n;
        CHECK(objective == doctest::Approx(x.squaredNorm() / n).epsilon(1e-8));
    }
    SUBCASE("rank-1 input, one bit carries the whole norm") {
        Eigen::VectorXd a = oracles::gaussian_matrix(50, 1, 63);
        a -= Eigen::VectorXd::Constant(50, a.mean());
        Eigen::VectorXd b = oracles::gaussian_matrix(6, 1, 64);
        const Eigen::MatrixXd r1 = a * b.transpose();
        const auto p = quantizer::itq_projection(r1, 1);
        CHECK(p.projected.norm() == doctest::Approx(r1.norm()).epsilon(1e-8));
    }
    SUBCASE("objective value and optimality against 500 random bases") {
        const auto p = quantizer::itq_projection(x, 4);
        CHECK(p.projected == x * p.basis);
        const double objective =
            (p.basis.transpose() * x.transpose() * x * p.basis).trace() / n;
        const double expected = oracle.sigma.head(4).squaredNorm() / n;
        CHECK(objective == doctest::Approx(expected).epsilon(1e-6));
        for (std::uint64_t seed = 0; seed < 500; ++seed) {
            const Eigen::MatrixXd rival = oracles::random_orthonormal(10, 4, 7000 + seed);
            const double value =
                (rival.transpose() * x.transpose() * x * rival).trace() / n;
            CHECK(objective >= value - 1e-9);
        }
    }
    SUBCASE("dimension out of range") {
        CHECK_THROWS_AS(quantizer::itq_projection(x, 0), ParameterError);
        CHECK_THROWS_AS(quantizer::itq_projection(x, 11), ParameterError);
    }
}

TEST_CASE("minimize_quantization basics") {
    SUBCASE("T = 0: codes from the seeded initial rotation, empty trace") {
        const Eigen::MatrixXd x = oracles::naive_center(oracles::gaussian_matrix(30, 6, 70));
        const auto result = quantizer::minimize_quantization(x, 0, 5);
        CHECK(result.trace.losses.empty());
        const auto r0 = linalg::random_orthogonal(6, 5);
        CHECK((result.trace.final_rotation.matrix() - r0.matrix()).norm() == 0.0);
        CHECK((result.codes - naive_sign(x * r0.matrix())).norm() == 0.0);
    }
    SUBCASE("codes are exactly +-1") {
        Eigen::MatrixXd x = oracles::gaussian_matrix(20, 4, 71);
        x.row(3).setZero();  // exercise sgn(0)
        const auto result = quantizer::minimize_quantization(x, 3, 6);
        CHECK((result.codes.array().abs() == 1.0).all());
    }
    SUBCASE("a complete +-1 pattern matrix reaches zero loss after one iteration") {
        // all four sign patterns in 2 bits, three copies each
        Eigen::MatrixXd patterns(4, 2);
        patterns << 1, 1, 1, -1, -1, 1, -1, -1;
        Eigen::MatrixXd x(12, 2);
        x << patterns, patterns, patterns;
        for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
            const auto result = quantizer::minimize_quantization(x, 1, seed);
            const double final_loss =
                quantizer::quantization_loss(result.codes, x, result.trace.final_rotation);
            CHECK(final_loss <= 1e-12);
            check_non_increasing(result.trace.losses);
        }
    }
}

TEST_CASE("minimize_quantization locksteps with an independent reference") {
    const Eigen::MatrixXd x = oracles::naive_center(oracles::gaussian_matrix(128, 16, 505));
    const int iterations = 50;
    const std::uint64_t seed = 9;

    const auto result = quantizer::minimize_quantization(x, iterations, seed);
    REQUIRE(result.trace.losses.size() == 50);
    check_non_increasing(result.trace.losses);
    CHECK(result.trace.losses.back() <= result.trace.losses.front());

    // Reference run: same seeded initial rotation, but sign, loss, and the
    // Procrustes update all recomputed through the oracles.
    Eigen::MatrixXd rotation = linalg::random_orthogonal(16, seed).matrix();
    std::vector<double> reference;
    for (int it = 0; it < iterations; ++it) {
        const Eigen::MatrixXd rotated = x * rotation;
        const Eigen::MatrixXd codes = naive_sign(rotated);
        reference.push_back(naive_loss(codes, rotated));
        rotation = oracles::procrustes_via_jacobi(codes, x);
    }
    for (int it = 0; it < iterations; ++it) {
        CHECK(result.trace.losses[static_cast<std::size_t>(it)] ==
              doctest::Approx(reference[static_cast<std::size_t>(it)]).epsilon(1e-8));
    }
}

TEST_CASE("quantization_loss") {
    SUBCASE("zero when codes equal the rotated data") {
        Eigen::MatrixXd v(4, 2);
        v << 1, 1, 1, -1, -1, 1, -1, -1;
        const linalg::RotationMatrix identity{Eigen::MatrixXd::Identity(2, 2)};
        CHECK(quantizer::quantization_loss(v, v, identity) == 0.0);
    }
    SUBCASE("antipodal codes give 4nc") {
        Eigen::MatrixXd v(3, 4);
        v << 1, -1, 1, -1, -1, -1, 1, 1, 1, 1, 1, -1;
        const linalg::RotationMatrix identity{Eigen::MatrixXd::Identity(4, 4)};
        CHECK(quantizer::quantization_loss(-v, v, identity) ==
              doctest::Approx(4.0 * 3 * 4).epsilon(1e-14));
    }
    SUBCASE("matches the elementwise oracle") {
        const Eigen::MatrixXd v = oracles::gaussian_matrix(15, 5, 81);
        const Eigen::MatrixXd codes = naive_sign(oracles::gaussian_matrix(15, 5, 82));
        const auto r = linalg::random_orthogonal(5, 83);
        CHECK(quantizer::quantization_loss(codes, v, r) ==
              doctest::Approx(naive_loss(codes, v * r.matrix())).epsilon(1e-10));
    }
    SUBCASE("shape mismatch") {
        const linalg::RotationMatrix identity{Eigen::MatrixXd::Identity(3, 3)};
        CHECK_THROWS_AS(quantizer::quantization_loss(Eigen::MatrixXd::Ones(2, 3),
                                                     Eigen::MatrixXd::Ones(3, 3), identity),
                        DimensionError);
    }
}

TEST_CASE("iiq_compress") {
    SUBCASE("four-point symmetric toy recovers all sign patterns") {
        Eigen::MatrixXd data(4, 2);
        data << 3, 0, -3, 0, 0, 3, 0, -3;
        const EmbeddingMatrix emb({"e1", "e1n", "e2", "e2n"}, data);
        CompressionConfig config{Method::IIQ, 0, 10, 2, 7};
        const auto result = quantizer::iiq_compress(emb, config);
        const Eigen::MatrixXd codes = result.embedding.to_signs();
        // all four patterns distinct
        for (int i = 0; i < 4; ++i) {
            for (int j = i + 1; j < 4; ++j) {
                CHECK((codes.row(i) - codes.row(j)).norm() > 0.0);
            }
        }
        // loss strictly below the initial-rotation loss
        const auto r0 = linalg::random_orthogonal(2, 7);
        const Eigen::MatrixXd rotated0 = data * r0.matrix();
        const double initial = naive_loss(naive_sign(rotated0), rotated0);
        REQUIRE_FALSE(result.trace.losses.empty());
        CHECK(result.trace.losses.back() < initial);
        check_non_increasing(result.trace.losses);
    }
    SUBCASE("degenerate pipeline D=0, O=d, T=0 equals the seeded rotation baseline") {
        const EmbeddingMatrix emb = random_embedding(25, 5, 301);
        CompressionConfig config{Method::IIQ, 0, 0, 0, 11};
        const auto result = quantizer::iiq_compress(emb, config);
        const Eigen::MatrixXd centered = oracles::naive_center(emb.data());
        const auto r0 = linalg::random_orthogonal(5, 11);
        const Eigen::MatrixXd expected = naive_sign(centered * r0.matrix());
        CHECK((result.embedding.to_signs() - expected).norm() == 0.0);
        CHECK(result.trace.losses.empty());
    }
    SUBCASE("deterministic: identical runs produce identical embeddings") {
        const EmbeddingMatrix emb = random_embedding(50, 8, 302);
        CompressionConfig config{Method::IIQ, 2, 20, 6, 3};
        const auto a = quantizer::iiq_compress(emb, config);
        const auto b = quantizer::iiq_compress(emb, config);
        CHECK(a.embedding == b.embedding);
        CHECK(a.trace.losses == b.trace.losses);
    }
    SUBCASE("trace carries mean and a d x O projection") {
        const EmbeddingMatrix emb = random_embedding(40, 10, 303);
        CompressionConfig config{Method::IIQ, 1, 5, 4, 13};
        const auto result = quantizer::iiq_compress(emb, config);
        CHECK(result.trace.mean.size() == 10);
        CHECK(result.trace.projection.rows() == 10);
        CHECK(result.trace.projection.cols() == 4);
        CHECK(result.trace.final_rotation.dim() == 4);
        CHECK(result.embedding.code_bits() == 4);
        // the recorded operators reproduce the codes
        const Eigen::MatrixXd reproduced = quantizer::sign_matrix(
            (emb.data().rowwise() - result.trace.mean.transpose()) *
            result.trace.projection * result.trace.final_rotation.matrix());
        CHECK((result.embedding.to_signs() - reproduced).norm() == 0.0);
    }
    SUBCASE("config validation") {
        const EmbeddingMatrix emb = random_embedding(10, 4, 304);
        CHECK_THROWS_AS(
            quantizer::iiq_compress(emb, CompressionConfig{Method::IIQ, 4, 5, 0, 0}),
            ParameterError);  // remove_top must stay below min(n, d)
        CHECK_THROWS_AS(
            quantizer::iiq_compress(emb, CompressionConfig{Method::IIQ, 0, 5, 9, 0}),
            ParameterError);  // out_dim > d
        CHECK_THROWS_AS(
            quantizer::iiq_compress(emb, CompressionConfig{Method::IIQ, 0, -1, 0, 0}),
            ParameterError);  // negative iterations
        CHECK_THROWS_AS(
            quantizer::iiq_compress(emb, CompressionConfig{Method::ITQ, 0, 5, 0, 0}),
            ParameterError);  // wrong method tag
    }
}

TEST_CASE("itq_compress") {
    SUBCASE("T=0 equals sgn(centered * W * R0)") {
        const EmbeddingMatrix emb = random_embedding(30, 6, 401);
        CompressionConfig config{Method::ITQ, 0, 0, 6, 21};
        const auto result = quantizer::itq_compress(emb, config);
        const Eigen::MatrixXd centered = oracles::naive_center(emb.data());
        const auto r0 = linalg::random_orthogonal(6, 21);
        const Eigen::MatrixXd expected =
            naive_sign(centered * result.trace.projection * r0.matrix());
        CHECK((result.embedding.to_signs() - expected).norm() == 0.0);
    }
    SUBCASE("rank-1 data, one bit: signs of the dominant scores up to global flip") {
        Eigen::VectorXd a = oracles::gaussian_matrix(40, 1, 402);
        a -= Eigen::VectorXd::Constant(40, a.mean());
        Eigen::VectorXd b = oracles::gaussian_matrix(5, 1, 403);
        const EmbeddingMatrix emb(testutil::make_vocab(40),
                                  Eigen::MatrixXd(a * b.transpose()));
        CompressionConfig config{Method::ITQ, 0, 5, 1, 2};
        const auto result = quantizer::itq_compress(emb, config);
        const Eigen::MatrixXd codes = result.embedding.to_signs();
        const Eigen::MatrixXd expected = naive_sign(a);
        const double agree = (codes - expected).norm();
        const double flipped = (codes + expected).norm();
        CHECK(std::min(agree, flipped) == 0.0);
    }
    SUBCASE("random 200x20 to 8 bits: monotone trace, beats the T=0 loss") {
        const EmbeddingMatrix emb = random_embedding(200, 20, 404);
        CompressionConfig config{Method::ITQ, 0, 50, 8, 5};
        const auto result = quantizer::itq_compress(emb, config);
        REQUIRE(result.trace.losses.size() == 50);
        check_non_increasing(result.trace.losses);

        const Eigen::MatrixXd v =
            oracles::naive_center(emb.data()) * result.trace.projection;
        CompressionConfig base_config = config;
        base_config.iterations = 0;
        const auto baseline = quantizer::itq_compress(emb, base_config);
        const double t0_loss = quantizer::quantization_loss(
            baseline.embedding.to_signs(), v, baseline.trace.final_rotation);
        const double final_loss = quantizer::quantization_loss(
            result.embedding.to_signs(), v, result.trace.final_rotation);
        CHECK(final_loss < t0_loss);
    }
}

TEST_CASE("centering is preserved through both pipelines") {
    const Eigen::MatrixXd x = oracles::gaussian_matrix(45, 9, 501);
    const Eigen::MatrixXd centered = oracles::naive_center(x);
    const double bound = 1e-8 * 45.0 * x.cwiseAbs().maxCoeff();

    const Eigen::MatrixXd trimmed = quantizer::remove_top_singular(centered, 2);
    CHECK(trimmed.colwise().sum().norm() <= bound);
    const Eigen::MatrixXd projected = linalg::pca_project(trimmed, 5);
    CHECK(projected.colwise().sum().norm() <= bound);
    const auto itq = quantizer::itq_projection(centered, 5);
    CHECK(itq.projected.colwise().sum().norm() <= bound);
}

TEST_CASE("IIQ keeps more isotropy than ITQ on anisotropic data") {
    Eigen::VectorXd spectrum(22);
    spectrum(0) = 100.0;
    spectrum(1) = 50.0;
    for (int i = 0; i < 20; ++i) {
        spectrum(2 + i) = 1.1 - 0.2 * static_cast<double>(i) / 19.0;
    }
    const Eigen::MatrixXd x = oracles::matrix_with_spectrum(200, spectrum, 22, 600, true);

    const double before = isotropy::isotropy_quadratic(x);
    const Eigen::MatrixXd iiq_input =
        linalg::pca_project(quantizer::remove_top_singular(x, 2), 10);
    const Eigen::MatrixXd itq_input = quantizer::itq_projection(x, 10).projected;
    const double iiq_value = isotropy::isotropy_quadratic(iiq_input);
    const double itq_value = isotropy::isotropy_quadratic(itq_input);
    CHECK(iiq_value >= before - 1e-12);
    CHECK(iiq_value > itq_value);
}

TEST_CASE("rotating a centered matrix preserves spectrum and quadratic isotropy") {
    const Eigen::MatrixXd x = oracles::naive_center(oracles::gaussian_matrix(80, 12, 700));
    const auto base = linalg::svd(x);
    const double base_iso = isotropy::isotropy_quadratic(x);
    for (std::uint64_t seed : {41ull, 42ull, 43ull, 44ull}) {
        const auto r = linalg::random_orthogonal(12, seed);
        const Eigen::MatrixXd rotated = x * r.matrix();
        const auto f = linalg::svd(rotated);
        for (Eigen::Index i = 0; i < 12; ++i) {
            CHECK(f.singular_values(i) ==
                  doctest::Approx(base.singular_values(i)).epsilon(1e-8));
        }
        CHECK(isotropy::isotropy_quadratic(rotated) ==
              doctest::Approx(base_iso).epsilon(1e-8));
    }
}

TEST_CASE("loss trace CSV export") {
    testutil::TempDir tmp("quant");
    quantizer::save_loss_curve({12.5, 3.25}, tmp.path("curve.csv"));
    CHECK(testutil::read_file(tmp.path("curve.csv")) == "iteration,loss\n1,12.5\n2,3.25\n");
}
