"""
Database models and schema for the vectorization run ledger.

Every pipeline run records its configuration, per-stage timings, the shape
layers it produced, the depth graph edges (including the ones removed to
break cycles) and any warnings raised along the way.
"""

import sqlite3
import datetime
import json
from dataclasses import dataclass
from typing import Optional, List, Dict, Any
from enum import Enum


class EventLevel(Enum):
    INFO = "info"
    WARNING = "warning"
    CRITICAL = "critical"


@dataclass
class VectorizeRun:
    """Represents one image-to-SVG run."""
    run_id: str
    source_name: str
    output_path: str
    start_time: datetime.datetime
    end_time: Optional[datetime.datetime] = None
    width: int = 0
    height: int = 0
    layer_count: int = 0
    segment_count: int = 0
    mse: Optional[float] = None
    psnr: Optional[float] = None
    config: Optional[Dict[str, Any]] = None


@dataclass
class StageTiming:
    timing_id: str
    run_id: str
    stage: str
    seconds: float


@dataclass
class ShapeLayerRecord:
    """One shape layer as it left the pipeline."""
    record_id: str
    run_id: str
    layer_index: int
    color_hex: str
    area: int
    depth_rank: int
    injected: bool = False
    solver_iterations: int = 0
    converged: bool = True
    shortcut: bool = False


@dataclass
class DepthEdgeRecord:
    edge_id: str
    run_id: str
    source: int
    target: int
    energy: float
    removed: bool = False
    v_value: Optional[int] = None


@dataclass
class PipelineEvent:
    """A warning or notice raised by a stage."""
    event_id: str
    run_id: str
    stage: str
    level: EventLevel
    description: str


class DatabaseManager:
    """Manages database connections and operations."""

    def __init__(self, db_path: str = ":memory:"):
        self.db_path = db_path
        self.connection: Optional[sqlite3.Connection] = None

    def connect(self):
        """Establish database connection."""
        # worker threads only compute; all writes happen on the caller's thread
        self.connection = sqlite3.connect(self.db_path, check_same_thread=False)
        self.connection.row_factory = sqlite3.Row

    def close(self):
        if self.connection:
            self.connection.close()
            self.connection = None

    def init_schema(self):
        """Initialize database schema."""
        if not self.connection:
            raise RuntimeError("Database not connected")

        cursor = self.connection.cursor()
        cursor.executescript("""
            CREATE TABLE IF NOT EXISTS vectorize_runs (
                run_id TEXT PRIMARY KEY,
                source_name TEXT NOT NULL,
                output_path TEXT NOT NULL,
                start_time TIMESTAMP NOT NULL,
                end_time TIMESTAMP,
                width INTEGER DEFAULT 0,
                height INTEGER DEFAULT 0,
                layer_count INTEGER DEFAULT 0,
                segment_count INTEGER DEFAULT 0,
                mse REAL,
                psnr REAL,
                config TEXT
            );

            CREATE TABLE IF NOT EXISTS stage_timings (
                timing_id TEXT PRIMARY KEY,
                run_id TEXT NOT NULL,
                stage TEXT NOT NULL,
                seconds REAL NOT NULL,
                FOREIGN KEY (run_id) REFERENCES vectorize_runs (run_id)
            );

            CREATE TABLE IF NOT EXISTS shape_layers (
                record_id TEXT PRIMARY KEY,
                run_id TEXT NOT NULL,
                layer_index INTEGER NOT NULL,
                color_hex TEXT NOT NULL,
                area INTEGER NOT NULL,
                depth_rank INTEGER NOT NULL,
                injected BOOLEAN DEFAULT FALSE,
                solver_iterations INTEGER DEFAULT 0,
                converged BOOLEAN DEFAULT TRUE,
                shortcut BOOLEAN DEFAULT FALSE,
                FOREIGN KEY (run_id) REFERENCES vectorize_runs (run_id)
            );

            CREATE TABLE IF NOT EXISTS depth_edges (
                edge_id TEXT PRIMARY KEY,
                run_id TEXT NOT NULL,
                source INTEGER NOT NULL,
                target INTEGER NOT NULL,
                energy REAL NOT NULL,
                removed BOOLEAN DEFAULT FALSE,
                v_value INTEGER,
                FOREIGN KEY (run_id) REFERENCES vectorize_runs (run_id)
            );

            CREATE TABLE IF NOT EXISTS pipeline_events (
                event_id TEXT PRIMARY KEY,
                run_id TEXT NOT NULL,
                stage TEXT NOT NULL,
                level TEXT NOT NULL,
                description TEXT NOT NULL,
                FOREIGN KEY (run_id) REFERENCES vectorize_runs (run_id)
            );

            CREATE INDEX IF NOT EXISTS idx_timings_run ON stage_timings (run_id);
            CREATE INDEX IF NOT EXISTS idx_layers_run ON shape_layers (run_id);
            CREATE INDEX IF NOT EXISTS idx_edges_run ON depth_edges (run_id);
            CREATE INDEX IF NOT EXISTS idx_events_run ON pipeline_events (run_id);
        """)

        self.connection.commit()

    def insert_vectorize_run(self, run: VectorizeRun):
        cursor = self.connection.cursor()
        cursor.execute("""
            INSERT INTO vectorize_runs
            (run_id, source_name, output_path, start_time, end_time, width, height,
             layer_count, segment_count, mse, psnr, config)
            VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
        """, (
            run.run_id, run.source_name, run.output_path, run.start_time, run.end_time,
            run.width, run.height, run.layer_count, run.segment_count, run.mse, run.psnr,
            json.dumps(run.config, default=str) if run.config else None
        ))
        self.connection.commit()

    def finish_vectorize_run(self, run: VectorizeRun):
        """Store the closing totals of a run."""
        cursor = self.connection.cursor()
        cursor.execute("""
            UPDATE vectorize_runs
            SET end_time = ?, width = ?, height = ?, layer_count = ?, segment_count = ?,
                mse = ?, psnr = ?
            WHERE run_id = ?
        """, (
            run.end_time, run.width, run.height, run.layer_count, run.segment_count,
            run.mse, run.psnr, run.run_id
        ))
        self.connection.commit()

    def insert_stage_timing(self, timing: StageTiming):
        cursor = self.connection.cursor()
        cursor.execute("""
            INSERT INTO stage_timings (timing_id, run_id, stage, seconds)
            VALUES (?, ?, ?, ?)
        """, (timing.timing_id, timing.run_id, timing.stage, timing.seconds))
        self.connection.commit()

    def insert_shape_layer(self, record: ShapeLayerRecord):
        cursor = self.connection.cursor()
        cursor.execute("""
            INSERT INTO shape_layers
            (record_id, run_id, layer_index, color_hex, area, depth_rank, injected,
             solver_iterations, converged, shortcut)
            VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
        """, (
            record.record_id, record.run_id, record.layer_index, record.color_hex,
            record.area, record.depth_rank, record.injected, record.solver_iterations,
            record.converged, record.shortcut
        ))
        self.connection.commit()

    def insert_depth_edge(self, edge: DepthEdgeRecord):
        cursor = self.connection.cursor()
        cursor.execute("""
            INSERT INTO depth_edges (edge_id, run_id, source, target, energy, removed, v_value)
            VALUES (?, ?, ?, ?, ?, ?, ?)
        """, (
            edge.edge_id, edge.run_id, edge.source, edge.target, edge.energy,
            edge.removed, edge.v_value
        ))
        self.connection.commit()

    def insert_pipeline_event(self, event: PipelineEvent):
        cursor = self.connection.cursor()
        cursor.execute("""
            INSERT INTO pipeline_events (event_id, run_id, stage, level, description)
            VALUES (?, ?, ?, ?, ?)
        """, (event.event_id, event.run_id, event.stage, event.level.value, event.description))
        self.connection.commit()

    def get_run_results(self, run_id: str) -> Dict[str, Any]:
        """Get comprehensive results for a vectorization run."""
        cursor = self.connection.cursor()

        cursor.execute("SELECT * FROM vectorize_runs WHERE run_id = ?", (run_id,))
        row = cursor.fetchone()
        if row is None:
            raise KeyError(f"unknown run {run_id}")
        run_info = dict(row)

        cursor.execute("""
            SELECT stage, seconds FROM stage_timings WHERE run_id = ? ORDER BY rowid
        """, (run_id,))
        timings = [dict(r) for r in cursor.fetchall()]

        cursor.execute("""
            SELECT level, COUNT(*) as count
            FROM pipeline_events
            WHERE run_id = ?
            GROUP BY level
        """, (run_id,))
        event_counts = [dict(r) for r in cursor.fetchall()]

        cursor.execute("""
            SELECT COUNT(*) FROM depth_edges WHERE run_id = ? AND removed = 1
        """, (run_id,))
        removed_edges = cursor.fetchone()[0]

        cursor.execute("""
            SELECT COUNT(*) FROM shape_layers WHERE run_id = ? AND converged = 0
        """, (run_id,))
        unconverged = cursor.fetchone()[0]

        return {
            "run_info": run_info,
            "stage_timings": timings,
            "event_counts": event_counts,
            "removed_edges": removed_edges,
            "unconverged_layers": unconverged,
        }

    def get_layer_records(self, run_id: str) -> List[Dict[str, Any]]:
        cursor = self.connection.cursor()
        cursor.execute("""
            SELECT * FROM shape_layers WHERE run_id = ? ORDER BY depth_rank
        """, (run_id,))
        return [dict(r) for r in cursor.fetchall()]
