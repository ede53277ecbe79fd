"""
Instance service for loading, generating and serializing instances.
"""

import logging
import math
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import ValidationError

from mtsp_cmsa.exceptions import InstanceParseError, MtspError
from mtsp_cmsa.models.model_instance import Instance
from mtsp_cmsa.schemas.instance_schemas import InstanceDocument

logger = logging.getLogger(__name__)

SUPPORTED_WEIGHT_TYPES = {"EUC_2D"}
SUPPORTED_PROBLEM_TYPES = {"TSP"}


class InstanceService:
    """Service for instance I/O and generation."""

    def __init__(self, round_tsplib_distances: bool = False):
        """
        Initialize instance service.

        Args:
            round_tsplib_distances: Apply TSPLIB nint() rounding to TSPLIB files
        """
        self.round_tsplib_distances = round_tsplib_distances

    def parse_tsplib(self, text: str, name: Optional[str] = None) -> Instance:
        """
        Parse a TSPLIB EUC_2D file. Node 1 of the file becomes the depot.

        Args:
            text: File content
            name: Fallback name if the file has no NAME entry

        Returns:
            Instance with cities 1..n in file order

        Raises:
            InstanceParseError: On malformed headers, missing or surplus
                coordinates, or unsupported weight types
        """
        header: Dict[str, str] = {}
        header_lines: Dict[str, int] = {}
        coords: List[Tuple[float, float]] = []
        seen_ids = set()
        dimension: Optional[int] = None
        in_coords = False
        coord_section_line = None

        lines = text.splitlines()
        for lineno, raw in enumerate(lines, start=1):
            line = raw.strip()
            if not line:
                continue
            if line == "EOF":
                break

            if in_coords:
                parts = line.split()
                if not parts[0].lstrip("+-").isdigit():
                    # another section started; only coordinates are supported
                    if parts[0].rstrip(":").upper().endswith("_SECTION"):
                        raise InstanceParseError(
                            f"unsupported section {parts[0]}", line=lineno
                        )
                    raise InstanceParseError(f"unexpected entry '{line}'", line=lineno)
                if len(parts) != 3:
                    raise InstanceParseError(
                        f"expected 'id x y', got {len(parts)} fields "
                        "(only 2-D coordinates are supported)",
                        line=lineno,
                    )
                try:
                    node_id = int(parts[0])
                    x, y = float(parts[1]), float(parts[2])
                except ValueError:
                    raise InstanceParseError(f"non-numeric coordinate entry '{line}'", line=lineno)
                if not (math.isfinite(x) and math.isfinite(y)):
                    raise InstanceParseError("non-finite coordinate", line=lineno)
                if node_id in seen_ids:
                    raise InstanceParseError(f"duplicate node id {node_id}", line=lineno)
                seen_ids.add(node_id)
                if dimension is not None and len(coords) >= dimension:
                    raise InstanceParseError(
                        f"more than DIMENSION={dimension} coordinates", line=lineno
                    )
                coords.append((x, y))
                continue

            if line.upper().startswith("NODE_COORD_SECTION"):
                if dimension is None:
                    raise InstanceParseError("NODE_COORD_SECTION before DIMENSION", line=lineno)
                in_coords = True
                coord_section_line = lineno
                continue

            if ":" not in line:
                keyword = line.split()[0]
                if keyword.upper().endswith("_SECTION"):
                    raise InstanceParseError(f"unsupported section {keyword}", line=lineno)
                raise InstanceParseError(f"malformed header line '{line}'", line=lineno)

            key, value = (part.strip() for part in line.split(":", 1))
            key = key.upper()
            header[key] = value
            header_lines[key] = lineno

            if key == "DIMENSION":
                try:
                    dimension = int(value)
                except ValueError:
                    raise InstanceParseError(f"DIMENSION is not an integer: '{value}'", line=lineno)
                if dimension < 2:
                    raise InstanceParseError(
                        "DIMENSION must be at least 2 (depot and one city)", line=lineno
                    )
            elif key == "EDGE_WEIGHT_TYPE" and value.upper() not in SUPPORTED_WEIGHT_TYPES:
                raise InstanceParseError(
                    f"EDGE_WEIGHT_TYPE {value} not supported (only EUC_2D)", line=lineno
                )
            elif key == "TYPE" and value.upper() not in SUPPORTED_PROBLEM_TYPES:
                raise InstanceParseError(f"TYPE {value} not supported (only TSP)", line=lineno)

        if dimension is None:
            raise InstanceParseError("missing DIMENSION", line=len(lines) or None)
        if coord_section_line is None:
            raise InstanceParseError("missing NODE_COORD_SECTION", line=len(lines) or None)
        if len(coords) != dimension:
            raise InstanceParseError(
                f"DIMENSION={dimension} but {len(coords)} coordinates found",
                line=header_lines.get("DIMENSION"),
            )

        instance = Instance.from_coords(
            coords,
            name=header.get("NAME") or name or "tsplib",
            round_distances=self.round_tsplib_distances,
        )
        logger.debug(f"Parsed TSPLIB instance {instance.name} with {instance.n_cities} cities")
        return instance

    @staticmethod
    def parse_json_instance(text: str, name: Optional[str] = None) -> Instance:
        """
        Parse the native JSON format {"depot": [x, y], "cities": [[x, y], ...]}.

        Args:
            text: JSON document
            name: Fallback name if the document has none

        Returns:
            Instance

        Raises:
            InstanceParseError: On missing keys, non-numeric coordinates or
                zero cities
        """
        try:
            document = InstanceDocument.model_validate_json(text)
        except ValidationError as e:
            details = "; ".join(
                f"{'.'.join(str(p) for p in err['loc']) or 'document'}: {err['msg']}"
                for err in e.errors()
            )
            raise InstanceParseError(f"invalid instance document: {details}")
        return Instance.from_coords(
            [document.depot, *document.cities],
            name=document.name or name or "instance",
        )

    @staticmethod
    def generate_random(n_cities: int, seed: int, name: Optional[str] = None) -> Instance:
        """
        Sample cities uniformly inside the unit disk around a depot at the origin.

        Radii follow the square-root law so that density is uniform per area.

        Args:
            n_cities: Number of cities (>= 1)
            seed: Random seed
            name: Instance identifier

        Returns:
            Instance

        Raises:
            MtspError: If n_cities < 1
        """
        if n_cities < 1:
            raise MtspError("n_cities must be at least 1", "INVALID_ARGUMENT")

        rng = np.random.default_rng(seed)
        radius = np.sqrt(rng.random(n_cities))
        angle = rng.random(n_cities) * 2.0 * np.pi
        points = np.column_stack((radius * np.cos(angle), radius * np.sin(angle)))
        # keep rounding noise from pushing a point past the boundary
        norms = np.hypot(points[:, 0], points[:, 1])
        outside = norms > 1.0
        points[outside] /= norms[outside, None]

        coords = np.vstack(([0.0, 0.0], points))
        return Instance.from_coords(coords, name=name or f"rand_n{n_cities}_s{seed}")

    @staticmethod
    def to_document(instance: Instance) -> InstanceDocument:
        """
        Convert an instance to its native JSON document.

        Args:
            instance: Instance to convert

        Returns:
            InstanceDocument
        """
        return InstanceDocument(
            name=instance.name,
            depot=instance.depot,
            cities=[tuple(p) for p in instance.city_coords()],
        )

    def load(self, path: Union[str, Path]) -> Instance:
        """
        Load an instance file, dispatching on content.

        JSON documents (first non-blank character '{') use the native format,
        anything else is read as TSPLIB.

        Args:
            path: Instance file path

        Returns:
            Instance

        Raises:
            InstanceParseError: If the file is unreadable or malformed
        """
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as e:
            raise InstanceParseError(f"cannot read {path}: {e}")

        if text.lstrip().startswith("{"):
            return self.parse_json_instance(text, name=path.stem)
        return self.parse_tsplib(text, name=path.stem)


def angdist_matrix(theta: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """
    Vectorized angular distances between every angle in theta and each center angle.

    Args:
        theta: Angles, shape (k,)
        centers: Center angles, shape (m,)

    Returns:
        (k, m) array of distances in [0, pi]
    """
    diff = np.fmod(np.abs(theta[:, None] - centers[None, :]), 2.0 * np.pi)
    return np.minimum(diff, 2.0 * np.pi - diff)
