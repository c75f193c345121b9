#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "elinspect/encoding.hpp"
#include "elinspect/features.hpp"
#include "elinspect/svm.hpp"

namespace elinspect {

/**
 * Self-describing artifact container: a text header (kind, ordered
 * key/value metadata, section directory) terminated by an `end` line,
 * followed by the raw section payloads as row-major little-endian 32-bit
 * floats in directory order. Byte-stable: identical contents serialize to
 * identical bytes.
 */
class Container {
public:
  std::string kind;

  void set_meta(const std::string& key, const std::string& value);
  void set_meta(const std::string& key, double value);
  void set_meta(const std::string& key, std::int64_t value);
  const std::string& meta(const std::string& key) const;
  double meta_double(const std::string& key) const;
  std::int64_t meta_int(const std::string& key) const;
  bool has_meta(const std::string& key) const;

  void add_section(const std::string& name, const Eigen::MatrixXf& data);
  void add_section(const std::string& name, const Eigen::MatrixXd& data);
  void add_section(const std::string& name, const Eigen::VectorXd& data);
  Eigen::MatrixXf section(const std::string& name) const;
  Eigen::MatrixXd section_d(const std::string& name) const;
  Eigen::VectorXd section_vec(const std::string& name) const;
  bool has_section(const std::string& name) const;

  void write(const std::filesystem::path& path) const;
  static Container read(const std::filesystem::path& path);

private:
  struct Section {
    std::string name;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    std::vector<float> data;  // row-major
  };
  std::vector<std::pair<std::string, std::string>> metadata_;
  std::vector<Section> sections_;
  const Section& find(const std::string& name) const;
};

/// Encoder container ("vlad_encoder"): codebooks, whitening and the
/// extraction parameters the encoder was fitted for.
Container to_container(const VladEncoder& encoder, const SamplingStrategy& sampling,
                       DescriptorKind descriptor);
VladEncoder encoder_from_container(const Container& c, SamplingStrategy* sampling = nullptr,
                                   DescriptorKind* descriptor = nullptr);

/// Model containers ("linear_svm" / "rbf_svm"), with the grid-search table
/// embedded for provenance when one is supplied.
Container to_container(const LinearSvmModel& model, const GridSearchResult* grid = nullptr);
Container to_container(const RbfSvmModel& model, const GridSearchResult* grid = nullptr);
LinearSvmModel linear_model_from_container(const Container& c);
RbfSvmModel rbf_model_from_container(const Container& c);

/// Descriptor cache dump: magic "ELFD", u32 version, u32 d, u32 n, then
/// n*d row-major little-endian floats. Keypoints are not stored.
void write_descriptor_dump(const std::filesystem::path& path, const DescriptorSet& set);
DescriptorSet read_descriptor_dump(const std::filesystem::path& path);

}  // namespace elinspect
