class ConfigKeys:
    MODEL_LENGTH = "model.length"
    MODEL_POINTS = "model.points"
    MODEL_ELECTRONS = "model.electrons"
    MODEL_MODES = "model.modes"
    MODEL_COUPLING = "model.coupling"
    MODEL_FOCK_CUTOFF = "model.fock_cutoff"
    MODEL_DIPOLE = "model.dipole"
    MODEL_INTERACTION_STRENGTH = "model.interaction.strength"
    MODEL_INTERACTION_SOFTENING = "model.interaction.softening"
    EXTERNAL_POTENTIAL_SAMPLES = "external.potential.samples"
    EXTERNAL_POTENTIAL_TERMS = "external.potential.terms"
    EXTERNAL_CURRENT = "external.current"
    EXTERNAL_VECTOR_POTENTIAL = "external.vector_potential"
    SOLVER_EIGEN_TOL = "solver.eigen.tol"
    SOLVER_EIGEN_MAX_ITERATIONS = "solver.eigen.max_iterations"
    SOLVER_EIGEN_NCV = "solver.eigen.ncv"
    SOLVER_EIGEN_DEGENERACY_TOL = "solver.eigen.degeneracy_tol"
    SOLVER_EIGEN_MAX_DIMENSION = "solver.eigen.max_dimension"
    SOLVER_SCF_MIXING = "solver.scf.mixing"
    SOLVER_SCF_ANDERSON_DEPTH = "solver.scf.anderson_depth"
    SOLVER_SCF_MAX_ITERATIONS = "solver.scf.max_iterations"
    SOLVER_SCF_DENSITY_TOL = "solver.scf.density_tol"
    SOLVER_SCF_FIELD_TOL = "solver.scf.field_tol"
    SOLVER_SCF_INITIAL_FIELD = "solver.scf.initial_field"
    SOLVER_SCF_XC = "solver.scf.xc"
    RUN_SEED = "run.seed"
    RUN_OUT_DIR = "run.out_dir"
    RUN_WORKERS = "run.workers"
    RUN_SCAN_COUNT = "run.scan.count"
    RUN_SCAN_STRATEGY = "run.scan.strategy"
    RUN_SCAN_EPS_EXT = "run.scan.eps_ext"
    RUN_SCAN_EPS_INT = "run.scan.eps_int"
    RUN_CUTOFFS = "run.cutoffs"
    RUN_DISPLACEMENT_TOLERANCE = "run.displacement.tolerance"
    LOG_PATH = "log.path"
    LOG_LEVEL = "log.level"
    LOG_DUMP = "log.dump"
