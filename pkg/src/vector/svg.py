"""
SVG serialization of depth-ordered vector shapes.
"""

from dataclasses import dataclass, field
from typing import List, Optional

from .bezier import CubicBezier, VectorShape
from ..depth.graph import DepthOrdering

XML_HEADER = '<?xml version="1.0" encoding="UTF-8"?>'
SVG_NAMESPACE = "http://www.w3.org/2000/svg"


def fmt(value: float) -> str:
    text = f"{value:.2f}"
    return "0.00" if text == "-0.00" else text


def _pair(point) -> str:
    return f"{fmt(point[0])} {fmt(point[1])}"


def path_data(loops: List[List[CubicBezier]]) -> str:
    """d attribute: one M ... C ... Z run per loop."""
    parts = []
    for loop in loops:
        if not loop:
            continue
        commands = [f"M {_pair(loop[0].p0)}"]
        for seg in loop:
            commands.append(f"C {_pair(seg.p1)}, {_pair(seg.p2)}, {_pair(seg.p3)}")
        commands.append("Z")
        parts.append(" ".join(commands))
    return " ".join(parts)


def paint_order(shapes: List[VectorShape], ordering: Optional[DepthOrdering] = None) -> List[VectorShape]:
    """Bottom shape first; noise shapes (negative ranks) come last. Shapes are not modified."""
    def rank(shape: VectorShape) -> int:
        if ordering is not None and shape.source == "layer":
            return ordering.rank[shape.layer_id]
        return shape.depth_rank

    return sorted(shapes, key=lambda s: (-rank(s), s.source, s.layer_id))


@dataclass
class SvgPath:
    d: str
    fill: str
    stroke: bool = False

    def to_element(self) -> str:
        extra = ' stroke="#000000" stroke-width="0.5"' if self.stroke else ""
        return f'<path d="{self.d}" fill="{self.fill}" fill-rule="nonzero"{extra}/>'


@dataclass
class SvgDocument:
    """Paths in paint order, deepest first."""
    width: int
    height: int
    elements: List[SvgPath] = field(default_factory=list)

    def to_text(self) -> str:
        lines = [
            XML_HEADER,
            f'<svg xmlns="{SVG_NAMESPACE}" version="1.1" width="{self.width}" height="{self.height}" '
            f'viewBox="0 0 {self.width} {self.height}">',
        ]
        lines.extend(f"  {element.to_element()}" for element in self.elements)
        lines.append("</svg>")
        return "\n".join(lines) + "\n"


def build_document(shapes: List[VectorShape], ordering: Optional[DepthOrdering], width: int,
                   height: int, stroke: bool = False) -> SvgDocument:
    doc = SvgDocument(width=width, height=height)
    for shape in paint_order(shapes, ordering):
        d = path_data(shape.loops)
        if d:
            doc.elements.append(SvgPath(d=d, fill=shape.fill_hex, stroke=stroke))
    return doc


def emit(shapes: List[VectorShape], ordering: Optional[DepthOrdering], width: int, height: int,
         stroke: bool = False) -> str:
    return build_document(shapes, ordering, width, height, stroke).to_text()


def write_svg(text: str, path: str):
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)
