// Writes the committed test fixtures. Inputs (weight/input archives, IDX
// digits) are plain data; the golden forward scores are computed by the
// double-precision oracle, never by the library under test.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "oracle_lib.hpp"
#include "xncaps/idx.hpp"
#include "xncaps/rng.hpp"
#include "xncaps/tensor.hpp"
#include "xncaps/weights.hpp"

using nlohmann::json;
using namespace xncaps;

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: gen_fixtures <output dir>\n";
    return 2;
  }
  const std::string dir = argv[1];

  const oracle::Dims d{2, 4, 3, 6, 5};
  Rng rng(20240817);

  DenseTensor W(Shape{d.ci, d.co, d.di, d.dO});
  DenseTensor I(Shape{d.bs, d.ci, d.di});
  for (std::size_t i = 0; i < W.numel(); ++i) W[i] = float(rng.normal() * 0.5);
  for (std::size_t i = 0; i < I.numel(); ++i) I[i] = float(rng.normal());

  WeightArchive wa;
  wa.add("W_Cap", W);
  save_weights(wa, dir + "/weights_tiny.xncw");
  WeightArchive ia;
  ia.add("I_Prim", I);
  save_weights(ia, dir + "/input_tiny.xncw");

  oracle::vec prim(I.data(), I.data() + I.numel());
  oracle::vec weights(W.data(), W.data() + W.numel());
  for (const char* layer : {"xnodr", "xnidr"}) {
    const auto kind =
        std::string(layer) == "xnodr" ? oracle::Kind::xnodr : oracle::Kind::xnidr;
    const oracle::vec scores = oracle::layer_scores(kind, prim, weights, d, 3);
    json golden;
    golden["layer"] = layer;
    golden["iterations"] = 3;
    golden["tolerance"] = 1e-5;
    golden["scores_shape"] = {d.bs, d.co};
    golden["scores"] = scores;
    std::ofstream out(dir + "/golden_forward_" + layer + ".json");
    out << golden.dump(2) << "\n";
  }

  // 6 tiny 28x28 digits with distinct labels for the composer fixture
  const std::size_t n = 6, side = 28;
  DenseTensor images(Shape{n, side, side, 1});
  std::vector<std::size_t> labels(n);
  for (std::size_t k = 0; k < n; ++k) {
    labels[k] = k;
    for (std::size_t y = 8 + k; y < 16 + k; ++y)
      for (std::size_t x = 6 + 2 * k; x < 12 + 2 * k; ++x)
        images[(k * side + y) * side + x] = float(100 + 20 * k) / 255.0f;
  }
  idx_write(dir + "/digits6-images.idx", idx_encode_images(images));
  std::vector<std::vector<std::size_t>> wrapped;
  for (std::size_t l : labels) wrapped.push_back({l});
  idx_write(dir + "/digits6-labels.idx", idx_encode_labels(wrapped));

  std::cout << "fixtures written to " << dir << "\n";
  return 0;
}
