"""
Main vectorization engine.

Runs the full raster-to-SVG pipeline stage by stage, timing each stage,
recording the run in the ledger and wrapping any failure in a StageError
that names the stage.
"""

import datetime
import logging
import os
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, asdict
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from typing_extensions import TypedDict

from ..database.models import (
    DatabaseManager, VectorizeRun, StageTiming, ShapeLayerRecord,
    DepthEdgeRecord, PipelineEvent, EventLevel
)
from ..depth.graph import (
    DepthGraph, DepthOrdering, PairSelection, build_graph, break_cycles, topo_sort
)
from ..elastica.contour import InpaintedShape, extract_contour, small_shape_shortcut, trace_mask
from ..elastica.region import covered_region, find_corners
from ..elastica.solver import ElasticaParams, PhaseField, MIN_GRID, solve
from ..errors import ConfigError, StageError
from ..geometry.energy import HullCache
from ..layers.extraction import LayerSet, detect_noise, extract_layers, noise_component_color
from ..layers.grouping import grouping_quantize
from ..raster.image import QuantizedImage, RasterImage, load_image, save_png
from ..raster.quantize import distinct_colors, kmeans_quantize
from ..vector.bezier import VectorShape, fit_shape
from ..vector.render import mse, psnr, render_shapes
from ..vector.svg import emit, write_svg

logger = logging.getLogger(__name__)


@dataclass
class PipelineConfig:
    """Configuration for a vectorization run."""
    colors: int = 16
    seed: int = 0
    kmeans_max_iters: int = 100
    delta: float = 0.05
    noise_area: int = 10
    grouping: bool = False
    mu: float = 0.75
    max_phases: int = 6
    group_same_color: bool = False
    pairs: str = "auto"
    elastica_a: float = 0.1
    elastica_b: float = 1.0
    epsilon: float = 5.0
    tikhonov: float = 3.0
    tol: float = 1e-4
    max_iters: int = 2000
    level: float = 0.0
    corner_radius: int = 5
    tangent_window: int = 4
    kappa_threshold: float = 1.25
    fit_tol: float = 1.0
    pixel_tol: float = 0.2
    curv_step: int = 3
    small_shape: int = 30
    append_noise: bool = False
    stroke: bool = False
    jobs: int = 1
    dump_layers: Optional[str] = None
    dump_graph: Optional[str] = None
    dump_fields: Optional[str] = None
    min_psnr: float = 32.0

    def validate(self, strict_delta: bool = False):
        """Raise ConfigError for the first field outside its range."""
        checks = [
            (self.colors >= 1, "colors must be at least 1"),
            (self.kmeans_max_iters >= 1, "kmeans_max_iters must be at least 1"),
            (self.delta >= 0, "delta must be non-negative"),
            (not strict_delta or 0.01 <= self.delta <= 0.1, "delta must lie in [0.01, 0.1]"),
            (self.noise_area >= 0, "noise_area must be non-negative"),
            (self.mu > 0, "mu must be positive"),
            (self.max_phases >= 1, "max_phases must be at least 1"),
            (self.pairs in {p.value for p in PairSelection}, "pairs must be auto, all or adjacent"),
            (self.elastica_a >= 0 and self.elastica_b >= 0, "elastica a and b must be non-negative"),
            (self.epsilon > 0, "epsilon must be positive"),
            (self.tikhonov > 0, "tikhonov must be positive"),
            (self.tol > 0, "tol must be positive"),
            (self.max_iters >= 1, "max_iters must be at least 1"),
            (-1.0 < self.level < 1.0, "level must lie in (-1, 1)"),
            (self.corner_radius >= 1, "corner_radius must be at least 1"),
            (self.tangent_window >= 1, "tangent_window must be at least 1"),
            (self.kappa_threshold >= 0, "kappa_threshold must be non-negative"),
            (self.fit_tol > 0, "fit_tol must be positive"),
            (0 < self.pixel_tol <= self.fit_tol, "pixel_tol must lie in (0, fit_tol]"),
            (self.curv_step >= 1, "curv_step must be at least 1"),
            (self.small_shape >= 0, "small_shape must be non-negative"),
            (self.jobs >= 1, "jobs must be at least 1"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)

    def elastica_params(self) -> ElasticaParams:
        return ElasticaParams(a=self.elastica_a, b=self.elastica_b, epsilon=self.epsilon,
                              c=self.tikhonov, tol=self.tol, max_iters=self.max_iters)


class VectorizationReport(TypedDict):
    run_id: str
    output_path: str
    width: int
    height: int
    colors: int
    layer_count: int
    noise_components: int
    segment_count: int
    removed_edges: int
    depth_order: List[int]
    unconverged_layers: List[int]
    stage_times: Dict[str, float]
    mse: float
    psnr: float


@dataclass
class LayerResult:
    """Inpainting outcome of one layer."""
    shape: InpaintedShape
    field: Optional[PhaseField] = None


class VectorizationEngine:
    """Core vectorization engine."""

    def __init__(self, config: PipelineConfig, db_manager: DatabaseManager):
        config.validate()
        self.config = config
        self.db_manager = db_manager
        self.run_id = str(uuid.uuid4())
        self.stage_times: Dict[str, float] = {}
        self.hull_cache = HullCache()

    # -- ledger helpers -------------------------------------------------

    def _event(self, stage: str, level: EventLevel, description: str):
        self.db_manager.insert_pipeline_event(PipelineEvent(
            event_id=str(uuid.uuid4()), run_id=self.run_id, stage=stage,
            level=level, description=description,
        ))

    @contextmanager
    def stage(self, name: str):
        """Time a stage and tag any failure with its name."""
        start = time.perf_counter()
        try:
            yield
        except StageError:
            raise
        except Exception as e:
            logger.error("stage %s failed: %s", name, e)
            self._event(name, EventLevel.CRITICAL, str(e))
            raise StageError(name, e) from e
        finally:
            elapsed = time.perf_counter() - start
            self.stage_times[name] = self.stage_times.get(name, 0.0) + elapsed
            self.db_manager.insert_stage_timing(StageTiming(
                timing_id=str(uuid.uuid4()), run_id=self.run_id, stage=name, seconds=elapsed,
            ))

    # -- stages ---------------------------------------------------------

    def quantize(self, image: RasterImage) -> QuantizedImage:
        cfg = self.config
        available = len(distinct_colors(image)[0])
        colors = cfg.colors
        if colors > available:
            message = f"colors={colors} exceeds the {available} distinct colors; using {available}"
            logger.warning(message)
            self._event("quantize", EventLevel.WARNING, message)
            colors = available
        q = kmeans_quantize(image, K=colors, seed=cfg.seed, max_iters=cfg.kmeans_max_iters)
        if len(q.palette) < colors:
            self._event("quantize", EventLevel.WARNING,
                        f"palette collapsed to {len(q.palette)} colors after rounding")
        return q

    def build_layers(self, q: QuantizedImage) -> LayerSet:
        cfg = self.config
        with self.stage("extract"):
            layer_set = extract_layers(q, group_same_color=cfg.group_same_color)
        with self.stage("noise"):
            layer_set = detect_noise(layer_set, noise_area=cfg.noise_area)
            if layer_set.noise.components:
                self._event("noise", EventLevel.INFO,
                            f"{len(layer_set.noise.components)} components moved to the noise layer")
        if cfg.grouping:
            with self.stage("grouping"):
                layer_set = grouping_quantize(q, layer_set, mu=cfg.mu, max_phases=cfg.max_phases)
        return layer_set

    def order_layers(self, layer_set: LayerSet) -> Tuple[DepthGraph, DepthGraph, DepthOrdering]:
        cfg = self.config
        with self.stage("graph"):
            graph = build_graph(layer_set, delta=cfg.delta, pairs=PairSelection(cfg.pairs),
                                cache=self.hull_cache)
        with self.stage("cycles"):
            acyclic = break_cycles(graph, layer_set, cache=self.hull_cache)
            for removed in acyclic.removed:
                self._event("cycles", EventLevel.INFO,
                            f"removed edge {removed.source}->{removed.target} (V={removed.v_value})")
        with self.stage("order"):
            ordering = topo_sort(acyclic, layer_set)
        return graph, acyclic, ordering

    def inpaint_layer(self, layer_id: int, layer_set: LayerSet, ordering: DepthOrdering) -> LayerResult:
        cfg = self.config
        region = covered_region(layer_id, ordering, layer_set)
        layer = layer_set.layers[layer_id]
        if layer.area < cfg.small_shape or min(layer_set.shape) < MIN_GRID:
            return LayerResult(shape=small_shape_shortcut(layer_id, region, layer_set, self.hull_cache))
        corners = find_corners(layer_id, region, layer_set, radius=cfg.corner_radius,
                               window=cfg.tangent_window)
        field = solve(layer_id, region, corners, cfg.elastica_params(), layer_set)
        return LayerResult(shape=extract_contour(field, cfg.level), field=field)

    def inpaint(self, layer_set: LayerSet, ordering: DepthOrdering) -> List[LayerResult]:
        ids = list(range(len(layer_set)))
        # warm the hull cache so worker threads only read it
        for layer in layer_set.layers:
            self.hull_cache.get(layer)
        if self.config.jobs > 1 and len(ids) > 1:
            with ThreadPoolExecutor(max_workers=self.config.jobs) as pool:
                return list(pool.map(lambda i: self.inpaint_layer(i, layer_set, ordering), ids))
        return [self.inpaint_layer(i, layer_set, ordering) for i in ids]

    def fit(self, layer_set: LayerSet, ordering: DepthOrdering,
            results: List[LayerResult]) -> List[VectorShape]:
        cfg = self.config
        palette = layer_set.source.palette
        shapes = []
        for layer, result in zip(layer_set.layers, results):
            shapes.append(fit_shape(
                result.shape.loops, layer.id, palette.colors[layer.color_index],
                ordering.rank[layer.id], threshold=cfg.kappa_threshold,
                tolerance=cfg.fit_tol, h=cfg.curv_step,
                pinned=result.shape.pinned, pixel_tol=cfg.pixel_tol,
            ))
        if cfg.append_noise:
            for k, component in enumerate(layer_set.noise.components):
                traced = trace_mask(component, layer_id=k)
                color = palette.colors[noise_component_color(component, layer_set.source)]
                shapes.append(fit_shape(
                    traced.loops, k, color, -(k + 1), threshold=cfg.kappa_threshold,
                    tolerance=cfg.fit_tol, h=cfg.curv_step, source="noise",
                    pinned=traced.pinned, pixel_tol=cfg.pixel_tol,
                ))
        return shapes

    # -- dumps ----------------------------------------------------------

    def dump_layers(self, layer_set: LayerSet):
        os.makedirs(self.config.dump_layers, exist_ok=True)
        palette = layer_set.source.palette
        for layer in layer_set.layers:
            name = f"layer_{layer.id}_{palette.hex(layer.color_index)[1:]}.png"
            save_png(layer.mask, os.path.join(self.config.dump_layers, name), mode="1")

    def dump_graph(self, graph: DepthGraph, acyclic: DepthGraph):
        with open(self.config.dump_graph, "w", encoding="utf-8") as f:
            for (i, j), energy in sorted(graph.edges.items()):
                f.write(f"edge {i} {j} {energy:.6f}\n")
            for removed in acyclic.removed:
                f.write(f"removed {removed.source} {removed.target} {removed.v_value}\n")

    def dump_fields(self, results: List[LayerResult]):
        os.makedirs(self.config.dump_fields, exist_ok=True)
        for result in results:
            u = result.field.u if result.field is not None else np.where(result.shape.mask, 1.0, -1.0)
            gray = np.clip(np.round((u + 1.0) * 127.5), 0, 255).astype(np.uint8)
            save_png(gray, os.path.join(self.config.dump_fields, f"field_{result.shape.layer_id}.png"),
                     mode="L")

    # -- ledger ---------------------------------------------------------

    def _record_layers(self, layer_set: LayerSet, ordering: DepthOrdering, results: List[LayerResult]):
        palette = layer_set.source.palette
        for layer, result in zip(layer_set.layers, results):
            field = result.field
            self.db_manager.insert_shape_layer(ShapeLayerRecord(
                record_id=str(uuid.uuid4()), run_id=self.run_id, layer_index=layer.id,
                color_hex=palette.hex(layer.color_index), area=layer.area,
                depth_rank=ordering.rank[layer.id], injected=layer.injected,
                solver_iterations=field.iterations if field else 0,
                converged=field.converged if field else True,
                shortcut=result.shape.shortcut,
            ))
            if field is not None and not field.converged:
                self._event("inpaint", EventLevel.WARNING,
                            f"layer {layer.id} stopped at max_iters={field.params.max_iters}")

    def _record_edges(self, graph: DepthGraph, acyclic: DepthGraph):
        removed = {(r.source, r.target): r for r in acyclic.removed}
        for (i, j), energy in sorted(graph.edges.items()):
            cut = removed.get((i, j))
            self.db_manager.insert_depth_edge(DepthEdgeRecord(
                edge_id=str(uuid.uuid4()), run_id=self.run_id, source=i, target=j,
                energy=energy, removed=cut is not None,
                v_value=cut.v_value if cut else acyclic.v_cache.get((i, j)),
            ))

    # -- driver ---------------------------------------------------------

    def run_complete_pipeline(self, source: Union[str, RasterImage], output_path: str,
                              source_name: Optional[str] = None) -> VectorizationReport:
        """Vectorize one image from start to finish and write the SVG."""
        cfg = self.config
        if source_name is None:
            source_name = source if isinstance(source, str) else "<array>"
        run = VectorizeRun(run_id=self.run_id, source_name=source_name, output_path=output_path,
                           start_time=datetime.datetime.now(), config=asdict(cfg))
        self.db_manager.insert_vectorize_run(run)

        with self.stage("load"):
            image = load_image(source) if isinstance(source, str) else source
        with self.stage("quantize"):
            q = self.quantize(image)

        layer_set = self.build_layers(q)
        if cfg.dump_layers:
            with self.stage("dump"):
                self.dump_layers(layer_set)

        graph, acyclic, ordering = self.order_layers(layer_set)
        if cfg.dump_graph:
            with self.stage("dump"):
                self.dump_graph(graph, acyclic)

        with self.stage("inpaint"):
            results = self.inpaint(layer_set, ordering)
        if cfg.dump_fields:
            with self.stage("dump"):
                self.dump_fields(results)

        with self.stage("fit"):
            shapes = self.fit(layer_set, ordering, results)
        with self.stage("emit"):
            svg = emit(shapes, ordering, q.width, q.height, stroke=cfg.stroke)
            write_svg(svg, output_path)
        with self.stage("render"):
            error = mse(render_shapes(shapes, q.width, q.height), q.to_rgb())

        self._record_layers(layer_set, ordering, results)
        self._record_edges(graph, acyclic)

        segment_count = sum(shape.segment_count for shape in shapes)
        run.end_time = datetime.datetime.now()
        run.width, run.height = q.width, q.height
        run.layer_count = len(layer_set)
        run.segment_count = segment_count
        run.mse = error
        run.psnr = psnr(error)
        self.db_manager.finish_vectorize_run(run)

        unconverged = [r.field.layer_id for r in results if r.field is not None and not r.field.converged]
        logger.info("vectorized %s: %d layers, %d segments, PSNR %.2f dB",
                    source_name, len(layer_set), segment_count, run.psnr)

        return VectorizationReport(
            run_id=self.run_id,
            output_path=output_path,
            width=q.width,
            height=q.height,
            colors=len(q.palette),
            layer_count=len(layer_set),
            noise_components=len(layer_set.noise.components),
            segment_count=segment_count,
            removed_edges=len(acyclic.removed),
            depth_order=ordering.order(),
            unconverged_layers=unconverged,
            stage_times=dict(self.stage_times),
            mse=error,
            psnr=run.psnr,
        )


def run(input_path: str, output_path: str, cfg: PipelineConfig,
        db_manager: Optional[DatabaseManager] = None) -> VectorizationReport:
    """Vectorize a PNG/PPM file into an SVG file."""
    owns_db = db_manager is None
    if owns_db:
        db_manager = DatabaseManager()
        db_manager.connect()
        db_manager.init_schema()
    try:
        return VectorizationEngine(cfg, db_manager).run_complete_pipeline(input_path, output_path)
    finally:
        if owns_db:
            db_manager.close()
