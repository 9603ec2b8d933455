"""Column generation for CVRP over ng-routes, stabilized with smooth and
flexible dual optimal inequalities."""

__version__ = "0.1.0"
