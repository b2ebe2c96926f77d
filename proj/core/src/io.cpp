#include "binquant/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "binquant/errors.hpp"

namespace binquant::io {

namespace {

constexpr std::array<char, 4> kMagic = {'B', 'E', 'M', 'B'};
constexpr std::uint32_t kFormatVersion = 1;

bool parse_double(std::string_view field, double& out) {
    if (!field.empty() && field.front() == '+') {
        field.remove_prefix(1);
        if (field.empty() || field.front() == '-' || field.front() == '+') {
            return false;
        }
    }
    const char* begin = field.data();
    const char* end = begin + field.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
}

// Splits on tab when the line contains one, otherwise on comma.
std::vector<std::string_view> split_fields(std::string_view line) {
    const char sep = line.find('\t') != std::string_view::npos ? '\t' : ',';
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

template <typename T>
void write_le(std::ofstream& out, T value) {
    std::array<char, sizeof(T)> bytes;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
    }
    out.write(bytes.data(), bytes.size());
}

template <typename T>
T read_le(std::ifstream& in, const char* what) {
    std::array<unsigned char, sizeof(T)> bytes;
    if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
        throw FormatError(std::string("truncated file while reading ") + what);
    }
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        value |= static_cast<T>(bytes[i]) << (8 * i);
    }
    return value;
}

} // namespace

EmbeddingMatrix load_text_embedding(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open embedding file: " + path.string());
    }

    std::vector<std::string> vocab;
    std::vector<double> values;
    Eigen::Index dim = -1;
    std::string line;
    std::size_t line_no = 0;

    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) {
            throw ParseError("empty line at line " + std::to_string(line_no));
        }
        std::string_view rest(line);
        const std::size_t token_end = rest.find(' ');
        if (token_end == std::string_view::npos || token_end == 0) {
            throw ParseError("expected `token v1 ... vd` at line " + std::to_string(line_no));
        }
        vocab.emplace_back(rest.substr(0, token_end));
        rest.remove_prefix(token_end + 1);

        Eigen::Index count = 0;
        while (!rest.empty()) {
            const std::size_t pos = rest.find(' ');
            const std::string_view field =
                pos == std::string_view::npos ? rest : rest.substr(0, pos);
            rest.remove_prefix(pos == std::string_view::npos ? rest.size() : pos + 1);
            double v = 0.0;
            if (!parse_double(field, v)) {
                throw ParseError("non-numeric field '" + std::string(field) + "' at line " +
                                 std::to_string(line_no));
            }
            if (!std::isfinite(v)) {
                throw ParseError("non-finite value at line " + std::to_string(line_no));
            }
            values.push_back(v);
            ++count;
        }
        if (count == 0) {
            throw ParseError("no values at line " + std::to_string(line_no));
        }
        if (dim == -1) {
            dim = count;
        } else if (count != dim) {
            throw FormatError("inconsistent dimension at line " + std::to_string(line_no) +
                              ": expected " + std::to_string(dim) + " values, got " +
                              std::to_string(count));
        }
    }
    if (vocab.empty()) {
        throw FormatError("no vectors in " + path.string());
    }

    const Eigen::Index n = static_cast<Eigen::Index>(vocab.size());
    Eigen::MatrixXd data(n, dim);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < dim; ++j) {
            data(i, j) = values[static_cast<std::size_t>(i * dim + j)];
        }
    }
    try {
        return EmbeddingMatrix(std::move(vocab), std::move(data));
    } catch (const ParameterError& e) {
        throw FormatError(std::string(e.what()) + " in " + path.string());
    }
}

void save_packed(const BinaryEmbedding& embedding, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open output file: " + path.string());
    }
    out.write(kMagic.data(), kMagic.size());
    write_le<std::uint32_t>(out, kFormatVersion);
    write_le<std::uint64_t>(out, embedding.size());
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(embedding.code_bits()));
    for (const auto& token : embedding.vocab()) {
        write_le<std::uint32_t>(out, static_cast<std::uint32_t>(token.size()));
        out.write(token.data(), static_cast<std::streamsize>(token.size()));
    }
    for (std::size_t i = 0; i < embedding.size(); ++i) {
        const auto row = embedding.row(i);
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size()));
    }
    out.flush();
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

BinaryEmbedding load_packed(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open embedding file: " + path.string());
    }
    std::array<char, 4> magic;
    if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
        throw FormatError("bad magic bytes: not a packed embedding file");
    }
    const auto version = read_le<std::uint32_t>(in, "version");
    if (version != kFormatVersion) {
        throw FormatError("unsupported format version " + std::to_string(version));
    }
    const auto n = read_le<std::uint64_t>(in, "vector count");
    const auto code_bits = read_le<std::uint32_t>(in, "code length");
    if (n == 0 || code_bits == 0) {
        throw FormatError("packed embedding must have n >= 1 and c >= 1");
    }
    const std::uintmax_t file_size = std::filesystem::file_size(path);

    std::vector<std::string> vocab;
    vocab.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        const auto len = read_le<std::uint32_t>(in, "token length");
        if (len > file_size) {
            throw FormatError("token length exceeds file size at token " + std::to_string(i));
        }
        std::string token(len, '\0');
        if (!in.read(token.data(), len)) {
            throw FormatError("truncated file while reading token " + std::to_string(i));
        }
        vocab.push_back(std::move(token));
    }

    BinaryEmbedding out = [&] {
        try {
            return BinaryEmbedding(std::move(vocab), code_bits);
        } catch (const ParameterError& e) {
            throw FormatError(std::string(e.what()));
        } catch (const DimensionError& e) {
            throw FormatError(std::string(e.what()));
        }
    }();

    const std::size_t row_bytes = out.row_bytes();
    std::vector<std::uint8_t> buffer(row_bytes);
    const std::uint8_t pad_mask =
        code_bits % 8 == 0 ? 0xFF : static_cast<std::uint8_t>((1u << (code_bits % 8)) - 1);
    for (std::uint64_t i = 0; i < n; ++i) {
        if (!in.read(reinterpret_cast<char*>(buffer.data()),
                     static_cast<std::streamsize>(row_bytes))) {
            throw FormatError("truncated file while reading row " + std::to_string(i));
        }
        if ((buffer[row_bytes - 1] & static_cast<std::uint8_t>(~pad_mask)) != 0) {
            throw FormatError("nonzero padding bits in row " + std::to_string(i));
        }
        for (std::uint32_t j = 0; j < code_bits; ++j) {
            if ((buffer[j / 8] >> (j % 8)) & 1u) {
                out.set_bit(i, j, 1);
            }
        }
    }
    return out;
}

bool is_packed_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        return false;
    }
    std::array<char, 4> magic;
    return in.read(magic.data(), magic.size()) && magic == kMagic;
}

SimilarityDataset load_similarity_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open dataset file: " + path.string());
    }
    SimilarityDataset ds;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) {
            continue;
        }
        const auto fields = split_fields(line);
        if (fields.size() != 3 || fields[0].empty() || fields[1].empty()) {
            throw ParseError("expected `word1 word2 score` at line " + std::to_string(line_no));
        }
        double score = 0.0;
        if (!parse_double(fields[2], score) || !std::isfinite(score)) {
            throw ParseError("bad score '" + std::string(fields[2]) + "' at line " +
                             std::to_string(line_no));
        }
        ds.pairs.push_back({std::string(fields[0]), std::string(fields[1]), score});
    }
    if (ds.pairs.empty()) {
        throw FormatError("empty dataset: " + path.string());
    }
    return ds;
}

CategorizationDataset load_categorization_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open dataset file: " + path.string());
    }
    CategorizationDataset ds;
    std::string line;
    std::size_t line_no = 0;
    std::string first_label;
    bool multi_label = false;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) {
            continue;
        }
        const auto fields = split_fields(line);
        if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
            throw ParseError("expected `word label` at line " + std::to_string(line_no));
        }
        if (ds.items.empty()) {
            first_label = std::string(fields[1]);
        } else if (fields[1] != first_label) {
            multi_label = true;
        }
        ds.items.push_back({std::string(fields[0]), std::string(fields[1])});
    }
    if (ds.items.empty()) {
        throw FormatError("empty dataset: " + path.string());
    }
    if (!multi_label) {
        throw FormatError("categorization dataset needs at least two distinct labels: " +
                          path.string());
    }
    return ds;
}

} // namespace binquant::io
