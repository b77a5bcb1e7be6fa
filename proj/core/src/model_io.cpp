#include <bit>
#include <cstring>
#include <fstream>

#include "arable/dataset.hpp"
#include "arable/error.hpp"
#include "arable/grid.hpp"
#include "arable/model.hpp"
#include "json.hpp"

namespace arable {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

void save_model(const Model& model, const fs::path& base, std::uint64_t seed,
                const std::string& extra_json) {
  ojson m;
  m["kind"] = model_kind_name(model.kind());
  m["input_dim"] = model.input_dim();
  m["blocks"] = ojson::array();
  for (const auto& b : model.blocks())
    m["blocks"].push_back({{"name", b.name}, {"rows", b.rows}, {"cols", b.cols}});
  m["param_count"] = model.param_count();
  m["seed"] = seed;
  const ojson extra = ojson::parse(extra_json);
  for (const auto& [k, v] : extra.items()) m[k] = v;

  // The parameter vector is a one-row raster-free f64 blob.
  if (base.has_parent_path()) fs::create_directories(base.parent_path());
  {
    std::ofstream out(base.string() + ".f64", std::ios::binary);
    if (!out) throw DataError("cannot write model blob for " + base.string());
    static_assert(std::endian::native == std::endian::little,
                  "model blobs are written in host order; add a byte swap for big-endian hosts");
    out.write(reinterpret_cast<const char*>(model.params().data()),
              static_cast<std::streamsize>(model.param_count() * sizeof(double)));
  }
  std::ofstream out(base.string() + ".json", std::ios::binary);
  if (!out) throw DataError("cannot write model manifest for " + base.string());
  out << m.dump(2) << "\n";
}

std::unique_ptr<Model> load_model(const fs::path& base) {
  std::ifstream in(base.string() + ".json");
  if (!in) throw DataError("missing model manifest " + base.string() + ".json");
  ojson m;
  try {
    m = ojson::parse(in);
  } catch (const ojson::exception& e) {
    throw DataError("malformed model manifest: " + std::string(e.what()));
  }
  ModelSpec spec;
  spec.kind = parse_model_kind(m.at("kind").get<std::string>());
  const auto input_dim = m.at("input_dim").get<std::size_t>();
  const auto& blocks = m.at("blocks");
  if (spec.kind == ModelKind::Mlp) {
    spec.mlp_hidden.clear();
    for (std::size_t k = 0; k + 2 < blocks.size(); k += 2)
      spec.mlp_hidden.push_back(blocks[k].at("rows").get<std::size_t>());
  } else if (spec.kind == ModelKind::Lstm) {
    spec.lstm_hidden = blocks.at(1).at("cols").get<std::size_t>();
  }
  auto model = make_model(spec, input_dim, 0);
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const auto expect = model->blocks().at(k);
    if (blocks[k].at("rows").get<std::size_t>() != expect.rows ||
        blocks[k].at("cols").get<std::size_t>() != expect.cols)
      throw DataError("model manifest block '" + expect.name + "' has unexpected shape");
  }
  std::ifstream blob(base.string() + ".f64", std::ios::binary);
  if (!blob) throw DataError("missing model blob " + base.string() + ".f64");
  std::vector<char> bytes((std::istreambuf_iterator<char>(blob)), {});
  if (bytes.size() != model->param_count() * sizeof(double))
    throw DataError("model blob holds " + std::to_string(bytes.size() / 8) +
                    " values; manifest expects " + std::to_string(model->param_count()));
  std::memcpy(model->params().data(), bytes.data(), bytes.size());
  return model;
}

}  // namespace arable
