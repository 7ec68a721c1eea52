from polyclick.simulator.core import (OccupationPath, RenderedTrace, render_trace, simulate_clicks,
                                      simulate_emitter_jumps, simulate_occupation, simulate_record, write_occupation)

__all__ = ["OccupationPath", "RenderedTrace", "render_trace", "simulate_clicks", "simulate_emitter_jumps",
           "simulate_occupation", "simulate_record", "write_occupation"]
