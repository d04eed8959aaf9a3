#pragma once

#include <random>
#include <string>
#include <vector>

#include "corpusforge/evalkit.hpp"

inline const std::vector<std::string>& fixture_systems() {
  static const std::vector<std::string> ids = {"alpha-mt", "beta-mt", "gamma-mt", "delta-mt"};
  return ids;
}

// Items with k of the fixture systems each; output texts never mention a
// system id, so any id found in a client payload is a leak.
inline std::vector<corpusforge::eval::EvalItem> random_items(std::mt19937_64& rng, std::size_t n) {
  using namespace corpusforge::eval;
  static const std::vector<Direction> directions = {{"am", "en"}, {"ti", "en"}, {"en", "am"}, {"en", "ti"}};
  std::uniform_int_distribution<std::size_t> dir(0, directions.size() - 1), k(2, 4), word(0, 999);
  std::vector<EvalItem> items;
  for (std::size_t i = 0; i < n; ++i) {
    EvalItem item;
    item.item_id = "item-" + std::to_string(i);
    item.direction = directions[dir(rng)];
    item.granularity = i % 3 == 0 ? Granularity::story : Granularity::sentence;
    item.genre = i % 2 ? "news" : "culture";
    item.source_text = "source w" + std::to_string(word(rng));
    const std::size_t systems = k(rng);
    for (std::size_t s = 0; s < systems; ++s) {
      item.outputs.push_back({fixture_systems()[s], "output w" + std::to_string(word(rng)) + " w" +
                                                        std::to_string(word(rng))});
    }
    items.push_back(std::move(item));
  }
  return items;
}
