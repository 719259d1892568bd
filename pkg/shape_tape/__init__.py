""" Package for shape differentiation of finite element models. The components build on each other:

    mesh - Triangle meshes carry the shape. Only their coordinates change, either by an explicit move
    (which the tape records) or by a replay. Meshes come from Gmsh 2.2 files or the built-in generators,
    boundary meshes hold the vertices of marked facets, and VTK files show the results.

    forms - Variational forms are written as expression trees over meshes and function spaces. Three
    transforms turn one form into another: the derivative with respect to a coefficient, the adjoint of a
    bilinear form, and the shape derivative of a form with respect to the mesh coordinates.

    fem - A minimal finite element engine assembles forms by quadrature on Lagrange elements up to degree 2
    (scalar, vector and Taylor-Hood mixed spaces) and solves the resulting sparse systems.

    tape - Solves, assemblies, mesh moves and sums are overloaded so that each call is recorded on a tape
    while recording is on. A reduced functional replays the tape for new control values, sweeps it backwards
    for the gradient, forwards for directional derivatives, and forward-over-reverse for Hessian actions.
    A Taylor test checks all of them against the convergence rates of the remainders.

    deform - Shape gradients become descent directions through Riesz maps. The elasticity map uses a Lame
    field that is large near the design boundary, the same field extends boundary tractions into the domain,
    and a steepest descent with Armijo backtracking uses both to optimize shapes.

    cases - Two recorded studies: advection-diffusion around a rotating hole over many time steps, and
    Stokes flow past an obstacle with volume and barycenter penalties. Each answers value, gradient, Taylor,
    cross-check and (for the obstacle) optimization queries with a JSON-ready report.

    options, toolkit - Command-line options and the factory that turns them into cases and reports.

    __main__ - The first command-line argument chooses one of the modes taylor, run, optimize or mesh-info. """

from shape_tape.options import ShapeOptions
from shape_tape.toolkit import ShapeTape
