from shape_tape.cases import PIPELINES, TUBE_VARIANTS, PironneauConfig, TubeConfig
from shape_tape.util.cmdline import CmdlineOptions, UsageError

CASES = ("tube", "pironneau")
RIESZ_CHOICES = ("h1", "elasticity", "l2")


class ShapeOptions(CmdlineOptions):
    """ Contains all command-line options shared by the entry modes. Defaults are the desk-scale settings. """

    def __init__(self, app_description="Running shape-tape as a library (should never be seen).", **kwargs) -> None:
        super().__init__(app_description, **kwargs)
        self.add("case", "tube", "Case to run.", CASES)
        self.add("variant", TubeConfig.variant, "How the tube rotation enters the tape.", TUBE_VARIANTS)
        self.add("pipeline", PironneauConfig.pipeline, "Pironneau displacement pipeline.", PIPELINES)
        self.add("riesz", PironneauConfig.riesz, "Riesz map of the riesz-descent pipeline.", RIESZ_CHOICES)
        self.add("T", TubeConfig.T, "End time of the tube case.")
        self.add("dt", TubeConfig.dt, "Time step of the tube case.")
        self.add("k", TubeConfig.k, "Diffusion coefficient of the tube case.")
        self.add("omega", TubeConfig.omega, "Rotations of the tube hole per unit time.")
        self.add("mesh-size", 0.0, "Target element size of the generated mesh (0 = case default).")
        self.add("alpha", PironneauConfig.alpha, "Weight of the obstacle volume penalty.")
        self.add("beta", PironneauConfig.beta, "Weight of the obstacle barycenter penalty.")
        self.add("seed", 0, "Seed for random directions.")
        self.add("out", "", "JSON report file. The report goes to standard output if empty.")
        self.add("out-dir", "", "Directory for VTK snapshots and optimizer traces. None are written if empty.")
        self.add("log", "", "Text file to log status and exceptions in addition to standard error.")
        self.add("no-timings", False, "Leave the timing section out of the report.")
        self.add("verbose", False, "Log solver iterations as well.")

    def check(self) -> None:
        """ Reject combinations of values that no case accepts. """
        if self.dt <= 0.0 or self.T < self.dt:
            raise UsageError(f'Need 0 < --dt <= --T, got --dt={self.dt:g} and --T={self.T:g}.')
        if self.mesh_size < 0.0:
            raise UsageError('Option --mesh-size must not be negative.')
        if self.alpha <= 0.0 or self.beta <= 0.0:
            raise UsageError('Options --alpha and --beta must be positive.')
