# This file is part of KerBil.
#
# KerBil is free software: you can redistribute it and/or modify it under the terms of
# the GNU General Public License as published by the Free Software Foundation, either
# version 3 of the License, or (at your option) any later version.
#
# KerBil is distributed in the hope that it will be useful, but WITHOUT ANY WARRANTY;
# without even the implied warranty of MERCHANTABILITY or FITNESS FOR A PARTICULAR
# PURPOSE.  See the GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License along with KerBil.
# If not, see <http://www.gnu.org/licenses/>.
#
# Copyright 2025-2026 the KerBil developers.
"""
Parallelization engine for KerBil sweeps.

This module contains the engine that distributes the independent cells of a sweep
(one fixed-hyperparameter solve each). When KerBil is launched with mpirun on more
than one node, the cells are distributed over MPI worker nodes and collected on the
master node. Otherwise they run on a pool of worker threads.
"""
from __future__ import absolute_import, division, print_function

import concurrent.futures
import sys
import time
from typing import Any, Callable, Dict, List, Sequence  # pylint: disable=unused-import

from kerbil.algorithms import generic_algorithms

try:
    from mpi4py import MPI
except ImportError:
    MPI = None


# Define some labels for internal MPI communication (just some syntactic sugar).
_RESULTTAG = 0
_NOMORE = 998
_ERRORTAG = 1001


def mpi_pool_size():
    # type: () -> int
    """
    Returns the number of MPI nodes KerBil is running on (1 without mpi4py).
    """
    if MPI is None:
        return 1
    return MPI.COMM_WORLD.Get_size()


class SweepEngine(object):
    """
    See documentation of the __init__ function.
    """

    def __init__(
        self,
        process_func,  # type: Callable[[Any, Any], Any]
        collect_func,  # type: Callable[[int, Any], None]
        seed,  # type: int
        num_threads=1,  # type: int
        deterministic=True,  # type: bool
    ):
        # type: (...) -> None
        """
        A master-worker engine for sweeps.

        When the engine starts, the 'process_func' function is called once for every
        cell, with the cell and a random generator seeded from the master seed and
        the index of the cell. The 'collect_func' function is called on the master
        node (or on the calling thread) with the index of the cell and the result of
        the processing. The engine operates according to the following rules:

        * With more than one MPI node, worker node r processes the cells whose index
          modulo the number of workers is r - 1 and sends the results to the master
          node (rank 0), which collects them. Worker nodes shut down when all their
          cells have been sent.

        * Otherwise, the cells are processed by a pool of 'num_threads' threads and
          collected on the calling thread.

        * In deterministic mode, results are collected in cell order, so the
          collected sequence does not depend on the number of nodes or threads.
          Otherwise, results are collected as soon as they are available.

        Arguments:

            process_func (Callable[[Any, numpy.random.Generator], Any]): the function
                that processes one cell. With MPI, its results must be picklable.

            collect_func (Callable[[int, Any], None]): the function that receives the
                result of each cell.

            seed (int): the master seed.

            num_threads (int): the number of worker threads when running without
                MPI. Defaults to 1.

            deterministic (bool): whether results are collected in cell order.
                Defaults to True.

        Attributes:

            role (str): the role of the current node ('worker' or 'master').

            rank (int): the rank (in MPI terms) of the current node, 0 without MPI.
        """
        self._map = process_func
        self._reduce = collect_func
        self._seed = seed
        self._num_threads = max(int(num_threads), 1)
        self._deterministic = deterministic
        self._num_collected_cells = 0
        self._start_time = 0.0

        self._mpi_size = mpi_pool_size()
        self.rank = MPI.COMM_WORLD.Get_rank() if self._mpi_size > 1 else 0
        if self.rank == 0:
            self.role = "master"
        else:
            self.role = "worker"

    def _run_cell(self, index, cell):
        # type: (int, Any) -> Any
        rng = generic_algorithms.make_rng(generic_algorithms.derive_seed(self._seed, index))
        return self._map(cell, rng)

    def start(self, cells):
        # type: (Sequence[Any]) -> int
        """
        Processes all the cells.

        * On a worker node, processes the node's share of the cells, sends the
          results to the master node, then shuts the node down.

        * On the master node (or without MPI), returns once every cell has been
          collected.

        Arguments:

            cells (Sequence[Any]): the cells.

        Returns:

            int: the number of collected cells.
        """
        self._start_time = time.time()
        self._num_collected_cells = 0
        if self._mpi_size > 1:
            if self.role == "worker":
                self._work(cells)
            else:
                self._gather(len(cells))
        elif self._num_threads == 1:
            for index, cell in enumerate(cells):
                self._collect(index, self._run_cell(index, cell))
        else:
            self._run_threads(cells)
        self.end_processing()
        return self._num_collected_cells

    def _run_threads(self, cells):
        # type: (Sequence[Any]) -> None
        with concurrent.futures.ThreadPoolExecutor(
            max_workers=self._num_threads
        ) as executor:
            futures = [
                executor.submit(self._run_cell, index, cell)
                for index, cell in enumerate(cells)
            ]
            if self._deterministic:
                for index, future in enumerate(futures):
                    self._collect(index, future.result())
            else:
                positions = dict((future, index) for index, future in enumerate(futures))
                for future in concurrent.futures.as_completed(futures):
                    self._collect(positions[future], future.result())

    def _work(self, cells):
        # type: (Sequence[Any]) -> None
        num_workers = self._mpi_size - 1
        # Flag used to make sure that the MPI messages have been processed.
        req = None
        for index, cell in enumerate(cells):
            if index % num_workers != self.rank - 1:
                continue
            try:
                result = self._run_cell(index, cell)
            except Exception as exc:  # pylint: disable=broad-except
                if req:
                    req.Wait()
                MPI.COMM_WORLD.send((index, exc), dest=0, tag=_ERRORTAG)
                break
            if req:
                req.Wait()
            req = MPI.COMM_WORLD.isend((index, result), dest=0, tag=_RESULTTAG)
        # Makes sure that the last MPI message has been processed, then tells the
        # master node that there are no more results.
        if req:
            req.Wait()
        MPI.COMM_WORLD.send(self.rank, dest=0, tag=_NOMORE)
        MPI.Finalize()
        sys.exit(0)

    def _gather(self, num_cells):
        # type: (int) -> None
        status = MPI.Status()
        pending = {}  # type: Dict[int, Any]
        next_index = 0
        num_finished = 0
        while num_finished < self._mpi_size - 1:
            message = MPI.COMM_WORLD.recv(
                source=MPI.ANY_SOURCE, tag=MPI.ANY_TAG, status=status
            )
            tag = status.Get_tag()
            if tag == _NOMORE:
                num_finished += 1
                continue
            if tag == _ERRORTAG:
                index, exc = message
                print("Sweep cell {0} failed on RANK {1}.".format(index, status.Get_source()))
                sys.stdout.flush()
                raise exc
            index, result = message
            if not self._deterministic:
                self._collect(index, result)
                continue
            pending[index] = result
            while next_index in pending:
                self._collect(next_index, pending.pop(next_index))
                next_index += 1
        # Cells left behind a missing index are still collected, in order.
        for index in sorted(pending):
            self._collect(index, pending[index])
        if self._num_collected_cells != num_cells:
            print(
                "Warning: {0} of {1} sweep cells were collected.".format(
                    self._num_collected_cells, num_cells
                )
            )
            sys.stdout.flush()

    def _collect(self, index, result):
        # type: (int, Any) -> None
        self._reduce(index, result)
        self._num_collected_cells += 1

    def end_processing(self):
        # type: () -> None
        """
        Executes end-of-processing actions.

        This function is called on the master node once every cell has been
        collected. By default, it prints a message to the console. It can be
        overridden in a derived class to implement custom end-of-processing actions.
        """
        print(
            "Sweep finished. KerBil has processed {0} cells in {1:.1f} s.".format(
                self._num_collected_cells, time.time() - self._start_time
            )
        )
        sys.stdout.flush()
