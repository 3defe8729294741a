#pragma once

// ASCII PGM (P2) rendering of a clique's node block. Brighter pixels are
// stronger connections:
//
//   P2\n<m> <m>\n255\n
//   one line per source node k (top to bottom), target nodes j left to right,
//   values separated by single spaces
//
// pixel(k, j) = floor(255 * |w_kj| / max|w| + 0.5); an all-zero block is black.

#include <cmath>
#include <sstream>
#include <string>

#include "ynn/model.hpp"
#include "ynn/serialize.hpp"

namespace ynn {

inline std::string pixmap_pgm(const CliqueWeights& cw) {
  const Matrix block = cw.node_block();
  const std::size_t m = block.rows();
  const double peak = max_abs(block);
  std::ostringstream out;
  out << "P2\n" << m << ' ' << m << "\n255\n";
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t j = 0; j < m; ++j) {
      const int px = peak > 0.0 ? static_cast<int>(std::floor(255.0 * std::abs(block(k, j)) / peak + 0.5)) : 0;
      out << (j ? " " : "") << px;
    }
    out << '\n';
  }
  return out.str();
}

inline void export_pixmap(const CliqueWeights& cw, const std::string& path) {
  write_text_file(path, pixmap_pgm(cw));
}

}  // namespace ynn
