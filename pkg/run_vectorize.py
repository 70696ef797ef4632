"""
Command-line interface for the layered vectorizer.
"""

import click
import logging
import math
import sys
import os

# Add src to Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from src.pipeline.engine import VectorizationEngine, PipelineConfig
from src.database.models import DatabaseManager
from src.scenarios.presets import create_scenario_config
from src.scenarios.synthetic import SCENES, build_scene


def analyze_results(db_manager: DatabaseManager, run_id: str, min_psnr: float) -> dict:
    """Analyze a run's ledger entries and determine pass/fail."""
    results = db_manager.get_run_results(run_id)
    run_info = results["run_info"]

    analysis = {
        "run_id": run_id,
        "psnr": run_info["psnr"],
        "mse": run_info["mse"],
        "warnings": 0,
        "critical_events": 0,
        "removed_edges": results["removed_edges"],
        "unconverged_layers": results["unconverged_layers"],
        "passed": True,
        "failure_reasons": []
    }

    for event in results["event_counts"]:
        if event["level"] == "warning":
            analysis["warnings"] += event["count"]
        elif event["level"] == "critical":
            analysis["critical_events"] += event["count"]

    if analysis["critical_events"] > 0:
        analysis["passed"] = False
        analysis["failure_reasons"].append("Critical pipeline events recorded")

    psnr_value = analysis["psnr"] if analysis["psnr"] is not None else math.inf
    if psnr_value < min_psnr:
        analysis["passed"] = False
        analysis["failure_reasons"].append(
            f"PSNR {psnr_value:.2f} dB below threshold {min_psnr:.2f} dB"
        )

    return analysis


def _format_psnr(value: float) -> str:
    return "inf" if math.isinf(value) else f"{value:.2f}"


@click.command()
@click.argument('input_path', required=False, type=click.Path(dir_okay=False))
@click.option('-o', '--output', 'output', required=True, help='Output SVG path')
@click.option('--scenario', type=click.Choice(sorted(SCENES)), default=None,
              help='Vectorize a built-in synthetic scene instead of INPUT_PATH')
@click.option('--colors', type=int, default=None, help='Palette size K')
@click.option('--seed', type=int, default=None, help='K-means seed')
@click.option('--delta', type=float, default=None, help='Depth energy threshold')
@click.option('--noise-area', type=int, default=None, help='Largest noise component area')
@click.option('--grouping', is_flag=True, default=None, help='Enable grouping quantization')
@click.option('--mu', type=float, default=None, help='Grouping perimeter weight')
@click.option('--max-phases', type=int, default=None, help='Grouping phase limit')
@click.option('--group-same-color', is_flag=True, default=None,
              help='One shape layer per palette color')
@click.option('--pairs', type=click.Choice(['auto', 'all', 'adjacent']), default=None,
              help='Which layer pairs enter the depth graph')
@click.option('--elastica-a', type=float, default=None, help='Elastica length weight')
@click.option('--elastica-b', type=float, default=None, help='Elastica curvature weight')
@click.option('--epsilon', type=float, default=None, help='Phase-field interface width')
@click.option('--tikhonov', type=float, default=None, help='Splitting regularization weight')
@click.option('--tol', type=float, default=None, help='Solver stopping tolerance')
@click.option('--max-iters', type=int, default=None, help='Solver iteration cap')
@click.option('--level', type=float, default=None, help='Contour extraction level')
@click.option('--corner-radius', type=int, default=None, help='Inpainting corner disk radius')
@click.option('--kappa-threshold', type=float, default=None, help='Curvature split threshold')
@click.option('--fit-tol', type=float, default=None, help='Bezier fit tolerance in pixels')
@click.option('--pixel-tol', type=float, default=None,
              help='Fit tolerance on edges between two fixed pixels')
@click.option('--curv-step', type=int, default=None, help='Curvature sample step h')
@click.option('--small-shape', type=int, default=None,
              help='Layers below this area skip the solver')
@click.option('--append-noise', is_flag=True, default=None, help='Emit noise components on top')
@click.option('--stroke', is_flag=True, default=None, help='Outline every path')
@click.option('--jobs', type=int, default=None, help='Parallel inpainting workers')
@click.option('--dump-layers', type=click.Path(file_okay=False), default=None,
              help='Directory for per-layer mask PNGs')
@click.option('--dump-graph', type=click.Path(dir_okay=False), default=None,
              help='File for depth graph edges')
@click.option('--dump-fields', type=click.Path(file_okay=False), default=None,
              help='Directory for phase-field PNGs')
@click.option('--min-psnr', type=float, default=None, help='PSNR needed for PASSED')
@click.option('--db-file', default=':memory:', help='Database file path')
@click.option('--verbose', is_flag=True, help='Verbose output')
def main(input_path, output, scenario, db_file, verbose, **overrides):
    """Convert a raster image into a depth-ordered layered SVG."""

    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format='%(levelname)s %(name)s: %(message)s')

    try:
        if scenario is None and input_path is None:
            raise click.UsageError("give INPUT_PATH or --scenario")

        config = create_scenario_config(scenario) if scenario else PipelineConfig()
        for name, value in overrides.items():
            if value is not None and value is not False:
                setattr(config, name, value)
        config.validate(strict_delta=True)

        # Initialize database
        db_manager = DatabaseManager(db_file)
        db_manager.connect()
        db_manager.init_schema()

        source = build_scene(scenario) if scenario else input_path
        source_name = f"scenario:{scenario}" if scenario else input_path

        if verbose:
            click.echo(f"Vectorizing: {source_name}")
            click.echo(f"Configuration: K={config.colors}, delta={config.delta}, "
                       f"epsilon={config.epsilon}, jobs={config.jobs}")

        engine = VectorizationEngine(config, db_manager)
        report = engine.run_complete_pipeline(source, output, source_name=source_name)

        analysis = analyze_results(db_manager, report["run_id"], config.min_psnr)

        # Display results
        click.echo(f"\n=== Vectorization Results ===")
        click.echo(f"Source: {source_name}")
        click.echo(f"Run ID: {report['run_id']}")
        click.echo(f"Output: {report['output_path']}")
        click.echo(f"Size: {report['width']}x{report['height']}, {report['colors']} colors")
        click.echo(f"Shape Layers: {report['layer_count']}")
        click.echo(f"Bezier Segments: {report['segment_count']}")
        click.echo(f"MSE: {report['mse']:.3f}  PSNR: {_format_psnr(report['psnr'])} dB")

        if verbose:
            click.echo(f"Noise Components: {report['noise_components']}")
            click.echo(f"Removed Depth Edges: {report['removed_edges']}")
            click.echo(f"Depth Order (top first): {report['depth_order']}")
            click.echo(f"Unconverged Layers: {analysis['unconverged_layers']}")
            for stage, seconds in report["stage_times"].items():
                click.echo(f"  {stage:<10} {seconds:8.3f} s")

        # Pass/Fail determination
        if analysis["passed"]:
            click.echo(click.style("RESULT: PASSED ✓", fg='green'))
        else:
            click.echo(click.style("RESULT: FAILED ✗", fg='red'))
            for reason in analysis["failure_reasons"]:
                click.echo(f"  • {reason}")

        db_manager.close()

    except click.UsageError:
        raise
    except Exception as e:
        click.echo(f"Error running vectorizer: {e}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
