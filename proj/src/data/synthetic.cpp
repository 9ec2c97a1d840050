#include "pjx/data/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

#include "pjx/data/vocab.hpp"
#include "pjx/errors.hpp"
#include "pjx/random.hpp"

namespace pjx {

namespace {

constexpr std::size_t kQuadrants = 4;

const char* task_name(SynthTask t) { return t == SynthTask::kVqa ? "vqa" : "activity_ambiguous"; }

std::vector<std::vector<std::size_t>> cells_by_quadrant(std::size_t rows, std::size_t cols) {
  std::vector<std::vector<std::size_t>> out(kQuadrants);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[quadrant_of(r, c, rows, cols)].push_back(r * cols + c);
  return out;
}

struct Placement {
  std::size_t object;
  std::size_t color;
  std::size_t cell;
};

std::string explanation_for(const Placement& p, std::size_t rows, std::size_t cols) {
  return "there is a " + synth_colors()[p.color] + " " + synth_objects()[p.object] + " in the " +
         synth_quadrants()[quadrant_of(p.cell / cols, p.cell % cols, rows, cols)];
}

std::string example_id(const std::string& split, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s-%05zu", split.c_str(), index);
  return buf;
}

SynthExample make_example(const SynthConfig& cfg, const std::string& split, std::size_t index, Rng& rng) {
  const SynthLayout layout{cfg.rows, cfg.cols};
  const auto quads = cells_by_quadrant(cfg.rows, cfg.cols);
  const std::size_t count = cfg.task == SynthTask::kVqa ? cfg.objects_per_image : 2;

  std::vector<std::size_t> objects(synth_objects().size());
  for (std::size_t i = 0; i < objects.size(); ++i) objects[i] = i;
  rng.shuffle(objects);
  std::vector<std::size_t> quad_order(kQuadrants);
  for (std::size_t i = 0; i < kQuadrants; ++i) quad_order[i] = i;
  rng.shuffle(quad_order);

  std::vector<Placement> placed;
  for (std::size_t k = 0; k < count; ++k) {
    const auto& cells = quads[quad_order[k]];
    placed.push_back({objects[k], rng.index(synth_colors().size()), cells[rng.index(cells.size())]});
  }

  SynthExample ex;
  auto& f = ex.features;
  f.channels = cfg.channels;
  f.rows = cfg.rows;
  f.cols = cfg.cols;
  f.source = FeatureSource::kSynthetic;
  f.values.assign(cfg.channels * cfg.rows * cfg.cols, 0.0);
  for (std::size_t r = 0; r < cfg.rows; ++r)
    for (std::size_t c = 0; c < cfg.cols; ++c) {
      f.at(layout.row_offset() + r, r, c) = 1.0;
      f.at(layout.col_offset() + c, r, c) = 1.0;
    }
  for (const auto& p : placed) {
    const auto r = p.cell / cfg.cols, c = p.cell % cfg.cols;
    f.at(layout.object_offset() + p.object, r, c) = 1.0;
    f.at(layout.color_offset() + p.color, r, c) = 1.0;
  }
  for (auto& v : f.values) v += cfg.noise * rng.normal();

  auto& rec = ex.record;
  rec.id = example_id(split, index);
  rec.features_path = "features/" + rec.id + ".pjxf";
  rec.att_gt_path = "masks/" + rec.id + ".pgm";

  const auto target = placed[rng.index(placed.size())];
  const auto quad = quadrant_of(target.cell / cfg.cols, target.cell % cfg.cols, cfg.rows, cfg.cols);
  if (cfg.task == SynthTask::kVqa) {
    if (rng.uniform() < 0.5) {
      rec.question = tokenize("what is in the " + synth_quadrants()[quad]);
      rec.answer = synth_objects()[target.object];
    } else {
      rec.question = tokenize("where is the " + synth_objects()[target.object]);
      rec.answer = synth_quadrants()[quad];
    }
  } else {
    rec.answer = synth_objects()[target.object];
  }
  rec.explanations = {explanation_for(target, cfg.rows, cfg.cols)};
  ex.evidence_cell = target.cell;
  ex.mask_cells.assign(cfg.rows * cfg.cols, false);
  ex.mask_cells[target.cell] = true;
  return ex;
}

std::vector<SynthExample> make_split(const SynthConfig& cfg, const std::string& split, std::size_t n, Rng& rng) {
  std::vector<SynthExample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(make_example(cfg, split, i, rng));
  return out;
}

// Object and colour decoded from one cell: the strongest one-hot channel when it clears 0.5.
std::optional<Placement> read_cell(const SpatialFeatures& f, const SynthLayout& layout, std::size_t cell) {
  const auto r = cell / f.cols, c = cell % f.cols;
  auto strongest = [&](std::size_t offset, std::size_t count) -> std::optional<std::size_t> {
    std::size_t best = 0;
    for (std::size_t k = 1; k < count; ++k) {
      if (f.at(offset + k, r, c) > f.at(offset + best, r, c)) best = k;
    }
    if (f.at(offset + best, r, c) < 0.5) return std::nullopt;
    return best;
  };
  const auto obj = strongest(layout.object_offset(), synth_objects().size());
  const auto col = strongest(layout.color_offset(), synth_colors().size());
  if (!obj || !col) return std::nullopt;
  return Placement{*obj, *col, cell};
}

}  // namespace

void SynthConfig::validate() const {
  if (rows < 2) throw ConfigError("rows", "must be >= 2 so the grid has quadrants");
  if (cols < 2) throw ConfigError("cols", "must be >= 2 so the grid has quadrants");
  if (channels < SynthLayout{rows, cols}.used_channels()) {
    throw ConfigError("channels", "must be >= " + std::to_string(SynthLayout{rows, cols}.used_channels()) +
                                      " for a " + std::to_string(rows) + "x" + std::to_string(cols) + " grid");
  }
  if (objects_per_image < 1 || objects_per_image > kQuadrants) {
    throw ConfigError("objects_per_image", "must be in [1, 4]");
  }
  if (!(noise >= 0.0 && noise < 0.25)) throw ConfigError("noise", "must be in [0, 0.25)");
  if (mask_scale < 1) throw ConfigError("mask_scale", "must be >= 1");
}

void to_json(nlohmann::json& j, const SynthConfig& c) {
  j = nlohmann::json{{"task", task_name(c.task)},
                     {"rows", c.rows},
                     {"cols", c.cols},
                     {"channels", c.channels},
                     {"train", c.train},
                     {"val", c.val},
                     {"test", c.test},
                     {"objects_per_image", c.objects_per_image},
                     {"noise", c.noise},
                     {"mask_scale", c.mask_scale}};
}

void from_json(const nlohmann::json& j, SynthConfig& c) {
  const auto task = j.value("task", std::string(task_name(c.task)));
  if (task == "vqa") {
    c.task = SynthTask::kVqa;
  } else if (task == "activity_ambiguous") {
    c.task = SynthTask::kActivityAmbiguous;
  } else {
    throw ConfigError("task", "expected vqa or activity_ambiguous, got " + task);
  }
  c.rows = j.value("rows", c.rows);
  c.cols = j.value("cols", c.cols);
  c.channels = j.value("channels", c.channels);
  c.train = j.value("train", c.train);
  c.val = j.value("val", c.val);
  c.test = j.value("test", c.test);
  c.objects_per_image = j.value("objects_per_image", c.objects_per_image);
  c.noise = j.value("noise", c.noise);
  c.mask_scale = j.value("mask_scale", c.mask_scale);
}

const std::vector<std::string>& synth_objects() {
  static const std::vector<std::string> v{"cat", "dog", "ball", "cup", "hat", "key"};
  return v;
}

const std::vector<std::string>& synth_colors() {
  static const std::vector<std::string> v{"red", "green", "blue", "yellow"};
  return v;
}

const std::vector<std::string>& synth_quadrants() {
  static const std::vector<std::string> v{"top left", "top right", "bottom left", "bottom right"};
  return v;
}

std::size_t quadrant_of(std::size_t row, std::size_t col, std::size_t rows, std::size_t cols) {
  return (row >= rows / 2 ? 2 : 0) + (col >= cols / 2 ? 1 : 0);
}

SynthDataset generate_synthetic(const SynthConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  SynthDataset ds{config, seed, {}, {}, {}};
  ds.train = make_split(config, "train", config.train, rng);
  ds.val = make_split(config, "val", config.val, rng);
  ds.test = make_split(config, "test", config.test, rng);
  return ds;
}

void validate_synthetic(const SynthExample& ex, const SynthConfig& cfg) {
  const SynthLayout layout{cfg.rows, cfg.cols};
  const auto& rec = ex.record;
  auto fail = [&](const std::string& what) { throw InputError(rec.id + ": " + what); };

  if (ex.evidence_cell >= cfg.rows * cfg.cols) fail("evidence cell outside the grid");
  const auto evidence = read_cell(ex.features, layout, ex.evidence_cell);
  if (!evidence) fail("evidence cell holds no object");
  const auto quad = synth_quadrants()[quadrant_of(ex.evidence_cell / cfg.cols, ex.evidence_cell % cfg.cols,
                                                  cfg.rows, cfg.cols)];
  const auto& object = synth_objects()[evidence->object];

  if (cfg.task == SynthTask::kVqa) {
    const auto q = join_tokens(rec.question);
    if (q == "what is in the " + quad) {
      if (rec.answer != object) fail("answer \"" + rec.answer + "\" but the " + quad + " holds a " + object);
    } else if (q == "where is the " + object) {
      if (rec.answer != quad) fail("answer \"" + rec.answer + "\" but the " + object + " is in the " + quad);
    } else {
      fail("question \"" + q + "\" does not refer to the evidence cell");
    }
  } else {
    if (!rec.question.empty()) fail("activity records carry no question");
    if (rec.answer != object) fail("answer \"" + rec.answer + "\" but the evidence cell holds a " + object);
  }
  if (rec.explanations.size() != 1 || rec.explanations[0] != explanation_for(*evidence, cfg.rows, cfg.cols)) {
    fail("explanation does not describe the evidence cell");
  }
  for (std::size_t i = 0; i < ex.mask_cells.size(); ++i) {
    if (ex.mask_cells[i] != (i == ex.evidence_cell)) fail("mask does not single out the evidence cell");
  }
}

void write_synthetic(const SynthDataset& ds, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir / "features", ec);
  if (ec) throw IoError("cannot create " + (out_dir / "features").string() + ": " + ec.message());
  fs::create_directories(out_dir / "masks", ec);
  if (ec) throw IoError("cannot create " + (out_dir / "masks").string() + ": " + ec.message());

  auto emit = [&](const std::string& split, const std::vector<SynthExample>& examples) {
    std::vector<ExampleRecord> records;
    records.reserve(examples.size());
    for (const auto& ex : examples) {
      write_features(out_dir / ex.record.features_path, ex.features);
      write_pgm(out_dir / *ex.record.att_gt_path,
                cell_mask(ds.config.rows, ds.config.cols, ex.mask_cells, ds.config.mask_scale));
      records.push_back(ex.record);
    }
    save_jsonl(split_path(out_dir, split), records);
  };
  emit("train", ds.train);
  emit("val", ds.val);
  emit("test", ds.test);

  std::ofstream meta(out_dir / "synth.json", std::ios::trunc);
  if (!meta) throw IoError("cannot write " + (out_dir / "synth.json").string());
  meta << nlohmann::json{{"config", ds.config}, {"seed", ds.seed}}.dump(2) << '\n';
}

}  // namespace pjx
