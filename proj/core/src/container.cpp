#include "elinspect/container.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "elinspect/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "container payloads are little-endian; big-endian hosts need byte swaps");

namespace elinspect {

namespace {

constexpr const char* kMagic = "#elinspect-container v1";

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void Container::set_meta(const std::string& key, const std::string& value) {
  for (auto& [k, v] : metadata_)
    if (k == key) {
      v = value;
      return;
    }
  metadata_.emplace_back(key, value);
}

void Container::set_meta(const std::string& key, double value) { set_meta(key, format_double(value)); }

void Container::set_meta(const std::string& key, std::int64_t value) {
  set_meta(key, std::to_string(value));
}

const std::string& Container::meta(const std::string& key) const {
  for (const auto& [k, v] : metadata_)
    if (k == key) return v;
  throw DataError("container is missing metadata key '" + key + "'");
}

double Container::meta_double(const std::string& key) const { return std::stod(meta(key)); }

std::int64_t Container::meta_int(const std::string& key) const { return std::stoll(meta(key)); }

bool Container::has_meta(const std::string& key) const {
  return std::any_of(metadata_.begin(), metadata_.end(),
                     [&](const auto& kv) { return kv.first == key; });
}

void Container::add_section(const std::string& name, const Eigen::MatrixXf& data) {
  Section s;
  s.name = name;
  s.rows = data.rows();
  s.cols = data.cols();
  s.data.resize(static_cast<std::size_t>(data.size()));
  for (Eigen::Index r = 0; r < data.rows(); ++r)
    for (Eigen::Index c = 0; c < data.cols(); ++c)
      s.data[static_cast<std::size_t>(r * data.cols() + c)] = data(r, c);
  sections_.push_back(std::move(s));
}

void Container::add_section(const std::string& name, const Eigen::MatrixXd& data) {
  add_section(name, Eigen::MatrixXf(data.cast<float>()));
}

void Container::add_section(const std::string& name, const Eigen::VectorXd& data) {
  add_section(name, Eigen::MatrixXf(data.cast<float>().transpose()));
}

const Container::Section& Container::find(const std::string& name) const {
  for (const auto& s : sections_)
    if (s.name == name) return s;
  throw DataError("container is missing section '" + name + "'");
}

bool Container::has_section(const std::string& name) const {
  return std::any_of(sections_.begin(), sections_.end(),
                     [&](const Section& s) { return s.name == name; });
}

Eigen::MatrixXf Container::section(const std::string& name) const {
  const Section& s = find(name);
  Eigen::MatrixXf out(s.rows, s.cols);
  for (Eigen::Index r = 0; r < s.rows; ++r)
    for (Eigen::Index c = 0; c < s.cols; ++c)
      out(r, c) = s.data[static_cast<std::size_t>(r * s.cols + c)];
  return out;
}

Eigen::MatrixXd Container::section_d(const std::string& name) const {
  return section(name).cast<double>();
}

Eigen::VectorXd Container::section_vec(const std::string& name) const {
  const Eigen::MatrixXd m = section_d(name);
  if (m.rows() != 1) throw DataError("section '" + name + "' is not a row vector");
  return m.row(0).transpose();
}

void Container::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write container: " + path.string());
  out << kMagic << '\n';
  out << "kind " << kind << '\n';
  for (const auto& [k, v] : metadata_) out << "meta " << k << ' ' << v << '\n';
  for (const auto& s : sections_)
    out << "section " << s.name << ' ' << s.rows << ' ' << s.cols << '\n';
  out << "end\n";
  for (const auto& s : sections_)
    out.write(reinterpret_cast<const char*>(s.data.data()),
              static_cast<std::streamsize>(s.data.size() * sizeof(float)));
  if (!out) throw DataError("failed writing container: " + path.string());
}

Container Container::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open container: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMagic)
    throw DataError("not an elinspect container: " + path.string());

  Container c;
  while (std::getline(in, line)) {
    if (line == "end") break;
    std::istringstream is(line);
    std::string tag;
    is >> tag;
    if (tag == "kind") {
      is >> c.kind;
    } else if (tag == "meta") {
      std::string key;
      is >> key;
      std::string value;
      std::getline(is, value);
      if (!value.empty() && value.front() == ' ') value.erase(0, 1);
      c.metadata_.emplace_back(key, value);
    } else if (tag == "section") {
      Section s;
      is >> s.name >> s.rows >> s.cols;
      if (!is || s.rows < 0 || s.cols < 0)
        throw DataError("malformed section header in " + path.string());
      c.sections_.push_back(std::move(s));
    } else {
      throw DataError("unrecognized container line: " + line);
    }
  }
  if (line != "end") throw DataError("truncated container header: " + path.string());
  for (auto& s : c.sections_) {
    s.data.resize(static_cast<std::size_t>(s.rows) * static_cast<std::size_t>(s.cols));
    in.read(reinterpret_cast<char*>(s.data.data()),
            static_cast<std::streamsize>(s.data.size() * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(s.data.size() * sizeof(float)))
      throw DataError("truncated container payload: " + path.string());
  }
  return c;
}

Container to_container(const VladEncoder& encoder, const SamplingStrategy& sampling,
                       DescriptorKind descriptor) {
  Container c;
  c.kind = "vlad_encoder";
  c.set_meta("version", static_cast<std::int64_t>(1));
  c.set_meta("m", static_cast<std::int64_t>(encoder.codebooks.size()));
  c.set_meta("K", static_cast<std::int64_t>(encoder.codebooks.empty() ? 0 : encoder.codebooks[0].K()));
  c.set_meta("d", static_cast<std::int64_t>(encoder.codebooks.empty() ? 0 : encoder.codebooks[0].dim()));
  c.set_meta("rho", encoder.rho);
  c.set_meta("r", static_cast<std::int64_t>(encoder.whitening.rank()));
  c.set_meta("epsilon_abs", encoder.whitening.epsilon);
  c.set_meta("sampling", to_string(sampling));
  c.set_meta("descriptor", to_string(descriptor));
  std::string seeds;
  for (const auto& cb : encoder.codebooks) {
    if (!seeds.empty()) seeds += ',';
    seeds += std::to_string(cb.seed);
  }
  c.set_meta("seeds", seeds);
  for (std::size_t j = 0; j < encoder.codebooks.size(); ++j)
    c.add_section("centroids_" + std::to_string(j), encoder.codebooks[j].centroids);
  c.add_section("mean", encoder.whitening.mean);
  c.add_section("basis", Eigen::MatrixXd(encoder.whitening.basis));
  c.add_section("scales", encoder.whitening.scales);
  return c;
}

VladEncoder encoder_from_container(const Container& c, SamplingStrategy* sampling,
                                   DescriptorKind* descriptor) {
  if (c.kind != "vlad_encoder") throw DataError("container is not a vlad_encoder");
  VladEncoder enc;
  enc.rho = c.meta_double("rho");
  const auto m = static_cast<std::size_t>(c.meta_int("m"));
  std::vector<std::uint64_t> seeds;
  {
    std::istringstream is(c.meta("seeds"));
    std::string tok;
    while (std::getline(is, tok, ',')) seeds.push_back(std::stoull(tok));
  }
  for (std::size_t j = 0; j < m; ++j) {
    Codebook cb;
    cb.centroids = c.section("centroids_" + std::to_string(j));
    cb.seed = j < seeds.size() ? seeds[j] : 0;
    enc.codebooks.push_back(std::move(cb));
  }
  enc.whitening.mean = c.section_vec("mean");
  enc.whitening.basis = c.section_d("basis");
  enc.whitening.scales = c.section_vec("scales");
  enc.whitening.epsilon = c.meta_double("epsilon_abs");
  if (sampling) *sampling = sampling_from_string(c.meta("sampling"));
  if (descriptor) *descriptor = descriptor_from_string(c.meta("descriptor"));
  return enc;
}

namespace {

void embed_grid(Container& c, const GridSearchResult& grid) {
  const auto cells = static_cast<Eigen::Index>(grid.table.size());
  if (cells == 0) return;
  const auto folds = static_cast<Eigen::Index>(grid.table[0].fold_scores.size());
  Eigen::MatrixXd table(cells, 3 + folds);
  for (Eigen::Index i = 0; i < cells; ++i) {
    const GridCell& cell = grid.table[static_cast<std::size_t>(i)];
    table(i, 0) = cell.C;
    table(i, 1) = cell.gamma;
    table(i, 2) = cell.mean_score;
    for (Eigen::Index f = 0; f < folds; ++f)
      table(i, 3 + f) = cell.fold_scores[static_cast<std::size_t>(f)];
  }
  c.add_section("cv_table", table);
  c.set_meta("cv_best_C", grid.best_C);
  c.set_meta("cv_best_gamma", grid.best_gamma);
  c.set_meta("cv_best_score", grid.best_score);
}

}  // namespace

Container to_container(const LinearSvmModel& model, const GridSearchResult* grid) {
  Container c;
  c.kind = "linear_svm";
  c.set_meta("version", static_cast<std::int64_t>(1));
  c.set_meta("C", model.C);
  c.set_meta("dim", static_cast<std::int64_t>(model.w.size()));
  c.add_section("w", model.w);
  c.add_section("b", Eigen::VectorXd(Eigen::VectorXd::Constant(1, model.b)));
  if (grid) embed_grid(c, *grid);
  return c;
}

Container to_container(const RbfSvmModel& model, const GridSearchResult* grid) {
  Container c;
  c.kind = "rbf_svm";
  c.set_meta("version", static_cast<std::int64_t>(1));
  c.set_meta("C", model.C);
  c.set_meta("gamma", model.gamma);
  c.set_meta("dim", static_cast<std::int64_t>(model.support_vectors.cols()));
  c.set_meta("n_sv", static_cast<std::int64_t>(model.support_vectors.rows()));
  c.add_section("support_vectors", Eigen::MatrixXd(model.support_vectors));
  c.add_section("alphas", model.alphas);
  c.add_section("b", Eigen::VectorXd(Eigen::VectorXd::Constant(1, model.b)));
  if (grid) embed_grid(c, *grid);
  return c;
}

LinearSvmModel linear_model_from_container(const Container& c) {
  if (c.kind != "linear_svm") throw DataError("container is not a linear_svm");
  LinearSvmModel m;
  m.w = c.section_vec("w");
  m.b = c.section_vec("b")[0];
  m.C = c.meta_double("C");
  return m;
}

RbfSvmModel rbf_model_from_container(const Container& c) {
  if (c.kind != "rbf_svm") throw DataError("container is not an rbf_svm");
  RbfSvmModel m;
  m.support_vectors = c.section_d("support_vectors");
  m.alphas = c.section_vec("alphas");
  m.b = c.section_vec("b")[0];
  m.gamma = c.meta_double("gamma");
  m.C = c.meta_double("C");
  return m;
}

void write_descriptor_dump(const std::filesystem::path& path, const DescriptorSet& set) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write descriptor dump: " + path.string());
  const char magic[4] = {'E', 'L', 'F', 'D'};
  const std::uint32_t version = 1;
  const auto d = static_cast<std::uint32_t>(set.dim());
  const auto n = static_cast<std::uint32_t>(set.rows());
  out.write(magic, 4);
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&d), 4);
  out.write(reinterpret_cast<const char*>(&n), 4);
  std::vector<float> row(d);
  for (Eigen::Index r = 0; r < set.rows(); ++r) {
    for (Eigen::Index j = 0; j < set.dim(); ++j) row[static_cast<std::size_t>(j)] = set.descriptors(r, j);
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!out) throw DataError("failed writing descriptor dump: " + path.string());
}

DescriptorSet read_descriptor_dump(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open descriptor dump: " + path.string());
  char magic[4];
  std::uint32_t version = 0, d = 0, n = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&d), 4);
  in.read(reinterpret_cast<char*>(&n), 4);
  if (!in || std::memcmp(magic, "ELFD", 4) != 0 || version != 1)
    throw DataError("not a descriptor dump: " + path.string());
  DescriptorSet set;
  set.descriptors.resize(n, d);
  std::vector<float> row(d);
  for (std::uint32_t r = 0; r < n; ++r) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
    if (!in) throw DataError("truncated descriptor dump: " + path.string());
    for (std::uint32_t j = 0; j < d; ++j) set.descriptors(r, j) = row[j];
  }
  return set;
}

}  // namespace elinspect
