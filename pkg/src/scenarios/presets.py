"""
Pipeline presets paired with the synthetic scenes.
"""

from ..pipeline.engine import PipelineConfig


def create_scenario_config(scenario_name: str) -> PipelineConfig:
    """Create a pipeline configuration for one of the built-in scenes."""

    if scenario_name == "blank":
        return PipelineConfig(colors=1)

    elif scenario_name == "blocks":
        return PipelineConfig(colors=4, max_iters=400)

    elif scenario_name == "two_rectangles":
        return PipelineConfig(colors=3, max_iters=400)

    elif scenario_name == "three_disks":
        return PipelineConfig(
            colors=4,
            delta=0.01,  # pairwise covered areas are only a few percent
            max_iters=400
        )

    elif scenario_name == "mountain":
        return PipelineConfig(colors=5, delta=0.05, max_iters=400)

    elif scenario_name == "kanizsa":
        return PipelineConfig(colors=3, group_same_color=True, max_iters=400)

    elif scenario_name == "notched_disk":
        return PipelineConfig(colors=3, max_iters=600)

    elif scenario_name == "noisy_blocks":
        return PipelineConfig(colors=3, noise_area=10, append_noise=True, max_iters=400)

    else:
        raise ValueError(f"Unknown scenario: {scenario_name}")
