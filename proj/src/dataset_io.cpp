#include "iva/dataset_io.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

static_assert(std::endian::native == std::endian::little,
              "payload format is little-endian float64");

namespace iva {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

using RowMajorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

fs::path normalize_prefix(const fs::path& prefix) {
  if (prefix.extension() == ".json") {
    fs::path p = prefix;
    p.replace_extension();
    return p;
  }
  return prefix;
}

void write_header(const fs::path& path, const json& header) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << header.dump(2) << "\n";
  if (!out) throw IoError("failed writing " + path.string());
}

json read_header(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  json header;
  try {
    in >> header;
  } catch (const json::exception& e) {
    throw IoError("malformed header in " + path.string() + ": " + e.what());
  }
  if (!header.is_object()) {
    throw IoError("header in " + path.string() + " is not a JSON object");
  }
  return header;
}

void check_format_fields(const json& header, const fs::path& path) {
  if (header.value("dtype", "") != "f64") {
    throw IoError(path.string() + ": unsupported dtype (expected \"f64\")");
  }
  if (header.value("order", "") != "row-major") {
    throw IoError(path.string() + ": unsupported order (expected \"row-major\")");
  }
}

int require_positive_int(const json& header, const char* field,
                         const fs::path& path) {
  if (!header.contains(field) || !header[field].is_number_integer()) {
    throw IoError(path.string() + ": missing integer field \"" + field + "\"");
  }
  const std::int64_t v = header[field].get<std::int64_t>();
  if (v < 1 || v > 1'000'000) {
    throw IoError(path.string() + ": field \"" + field + "\" out of range");
  }
  return static_cast<int>(v);
}

class PayloadWriter {
 public:
  explicit PayloadWriter(const fs::path& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open " + path.string() + " for writing");
  }

  void append(const MatrixXd& m) {
    const RowMajorMatrix rm = m;
    out_.write(reinterpret_cast<const char*>(rm.data()),
               static_cast<std::streamsize>(sizeof(double) * rm.size()));
    if (!out_) throw IoError("failed writing " + path_.string());
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

class PayloadReader {
 public:
  PayloadReader(const fs::path& path, std::size_t expected_doubles)
      : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open " + path.string());
    std::error_code ec;
    const auto bytes = fs::file_size(path, ec);
    if (ec || bytes != expected_doubles * sizeof(double)) {
      throw IoError(path.string() + ": payload size does not match header");
    }
  }

  MatrixXd next(int rows, int cols) {
    RowMajorMatrix m(rows, cols);
    in_.read(reinterpret_cast<char*>(m.data()),
             static_cast<std::streamsize>(sizeof(double) * m.size()));
    if (!in_) throw IoError("failed reading " + path_.string());
    return m;
  }

 private:
  fs::path path_;
  std::ifstream in_;
};

}  // namespace

void write_dataset(const fs::path& prefix, const DatasetStack& data) {
  const fs::path base = normalize_prefix(prefix);
  const Dims& d = data.dims();
  json header = {{"K", d.K}, {"N", d.N},     {"V", d.V},
                 {"dtype", "f64"},           {"order", "row-major"}};
  write_header(fs::path(base) += ".json", header);
  PayloadWriter payload(fs::path(base) += ".bin");
  payload.append(data.stacked());
}

DatasetStack read_dataset(const fs::path& prefix) {
  const fs::path base = normalize_prefix(prefix);
  const fs::path header_path = fs::path(base) += ".json";
  const json header = read_header(header_path);
  check_format_fields(header, header_path);
  const int K = require_positive_int(header, "K", header_path);
  const int N = require_positive_int(header, "N", header_path);
  const int V = require_positive_int(header, "V", header_path);
  const Dims dims(K, N, V);
  PayloadReader payload(fs::path(base) += ".bin",
                        static_cast<std::size_t>(K) * N * V);
  return DatasetStack(dims, payload.next(K * N, V));
}

void write_ground_truth(const fs::path& prefix, const GroundTruth& truth) {
  if (truth.mixing.empty() || truth.scv_covariances.empty()) {
    throw DimensionError("write_ground_truth: empty tensors");
  }
  const int K = static_cast<int>(truth.mixing.size());
  const int N = static_cast<int>(truth.mixing[0].rows());
  if (static_cast<int>(truth.scv_covariances.size()) != N) {
    throw DimensionError("write_ground_truth: need one covariance per source");
  }
  const fs::path base = normalize_prefix(prefix);
  json header = {{"kind", "ground-truth"}, {"case", truth.case_label},
                 {"K", K},                 {"N", N},
                 {"dtype", "f64"},         {"order", "row-major"}};
  write_header(fs::path(base) += ".json", header);
  PayloadWriter payload(fs::path(base) += ".bin");
  for (const MatrixXd& a : truth.mixing) {
    if (a.rows() != N || a.cols() != N) {
      throw DimensionError("write_ground_truth: mixing slices must be N x N");
    }
    payload.append(a);
  }
  for (const MatrixXd& s : truth.scv_covariances) {
    if (s.rows() != K || s.cols() != K) {
      throw DimensionError("write_ground_truth: covariance slices must be K x K");
    }
    payload.append(s);
  }
}

GroundTruth read_ground_truth(const fs::path& prefix) {
  const fs::path base = normalize_prefix(prefix);
  const fs::path header_path = fs::path(base) += ".json";
  const json header = read_header(header_path);
  if (header.value("kind", "") != "ground-truth") {
    throw IoError(header_path.string() + ": not a ground-truth file");
  }
  check_format_fields(header, header_path);
  const int K = require_positive_int(header, "K", header_path);
  const int N = require_positive_int(header, "N", header_path);
  GroundTruth truth;
  truth.case_label = header.value("case", "");
  PayloadReader payload(
      fs::path(base) += ".bin",
      static_cast<std::size_t>(K) * N * N + static_cast<std::size_t>(N) * K * K);
  truth.mixing.reserve(K);
  for (int k = 0; k < K; ++k) truth.mixing.push_back(payload.next(N, N));
  truth.scv_covariances.reserve(N);
  for (int n = 0; n < N; ++n) truth.scv_covariances.push_back(payload.next(K, K));
  return truth;
}

void write_demixing(const fs::path& prefix, const DemixingTensor& demixing) {
  const fs::path base = normalize_prefix(prefix);
  json header = {{"kind", "demixing"},
                 {"K", demixing.num_datasets()},
                 {"N", demixing.num_sources()},
                 {"dtype", "f64"},
                 {"order", "row-major"}};
  write_header(fs::path(base) += ".json", header);
  PayloadWriter payload(fs::path(base) += ".bin");
  for (int k = 0; k < demixing.num_datasets(); ++k) {
    payload.append(demixing.slice(k));
  }
}

DemixingTensor read_demixing(const fs::path& prefix) {
  const fs::path base = normalize_prefix(prefix);
  const fs::path header_path = fs::path(base) += ".json";
  const json header = read_header(header_path);
  if (header.value("kind", "") != "demixing") {
    throw IoError(header_path.string() + ": not a demixing file");
  }
  check_format_fields(header, header_path);
  const int K = require_positive_int(header, "K", header_path);
  const int N = require_positive_int(header, "N", header_path);
  PayloadReader payload(fs::path(base) += ".bin",
                        static_cast<std::size_t>(K) * N * N);
  MatrixStack slices;
  slices.reserve(K);
  for (int k = 0; k < K; ++k) slices.push_back(payload.next(N, N));
  return DemixingTensor(std::move(slices));
}

}  // namespace iva
