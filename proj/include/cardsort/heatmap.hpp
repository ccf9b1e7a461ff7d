#pragma once

#include <cstdio>
#include <string>

#include "cardsort/similarity.hpp"

namespace cardsort {

// Minimal SVG grid heatmap of a similarity matrix: linear grayscale (white at
// 0, black at 1), undefined cells drawn hatched. Intended for documentation
// figures, not interactive use.
inline std::string similarity_to_svg(const SimilarityMatrix& sim, int cell_px = 12) {
    const std::size_t m = sim.size();
    const int side = static_cast<int>(m) * cell_px;
    std::string svg;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
                  "viewBox=\"0 0 %d %d\">\n",
                  side, side, side, side);
    svg += buf;
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const int x = static_cast<int>(j) * cell_px;
            const int y = static_cast<int>(i) * cell_px;
            if (sim.defined(i, j)) {
                const int g = static_cast<int>(255.0 * (1.0 - sim.at(i, j)) + 0.5);
                std::snprintf(buf, sizeof(buf),
                              "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" "
                              "fill=\"rgb(%d,%d,%d)\"/>\n",
                              x, y, cell_px, cell_px, g, g, g);
                svg += buf;
            } else {
                std::snprintf(buf, sizeof(buf),
                              "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"white\" "
                              "stroke=\"#bbb\" stroke-width=\"0.5\"/>\n"
                              "<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" stroke=\"#888\" "
                              "stroke-width=\"1\"/>\n",
                              x, y, cell_px, cell_px, x, y + cell_px, x + cell_px, y);
                svg += buf;
            }
        }
    }
    svg += "</svg>\n";
    return svg;
}

} // namespace cardsort
