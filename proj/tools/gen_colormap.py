#!/usr/bin/env python3
"""Regenerates src/colormap.cpp: a 256-entry jet-style RGB table.

Entry i samples t = i / 255 with
    r = clip(1.5 - |4t - 3|), g = clip(1.5 - |4t - 2|), b = clip(1.5 - |4t - 1|)
and quantizes each component by floor(255 * v + 0.5).
"""
import pathlib


def channel(t, center):
    return min(1.0, max(0.0, 1.5 - abs(4.0 * t - center)))


def q(v):
    return int(255.0 * v + 0.5)


rows = []
for i in range(256):
    t = i / 255.0
    rows.append((q(channel(t, 3.0)), q(channel(t, 2.0)), q(channel(t, 1.0))))

lines = ["// Generated by tools/gen_colormap.py. Do not edit.", '#include "whatif/cam.hpp"', "",
         "namespace whatif {", "", "const std::array<std::array<std::uint8_t, 3>, 256> kHeatColormap = {{"]
for i in range(0, 256, 4):
    lines.append("    " + " ".join("{%d, %d, %d}," % rows[j] for j in range(i, i + 4)))
lines += ["}};", "", "} // namespace whatif", ""]
out = pathlib.Path(__file__).resolve().parent.parent / "src" / "colormap.cpp"
out.write_text("\n".join(lines))
