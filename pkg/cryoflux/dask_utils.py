import logging

import dask
from dask.distributed import Client

logger = logging.getLogger(__name__)

SCHEDULER_SYNCHRONOUS = "synchronous"
SCHEDULER_THREADS = "threads"
SCHEDULER_PROCESSES = "processes"
scheduler_types = [SCHEDULER_SYNCHRONOUS, SCHEDULER_THREADS, SCHEDULER_PROCESSES]

DEFAULT_SCHEDULER = SCHEDULER_SYNCHRONOUS


class DaskUtils:
    def __init__(self):
        self.client = None

    def connect_to_scheduler(self, address='127.0.0.1', port=8786):
        # Connect to a running distributed scheduler; dask.compute picks the client up as default
        logger.info("[Dask] Connecting to Dask scheduler at %s:%s", address, port)
        self.client = Client('{}:{}'.format(address, port))
        return self.client

    def close(self):
        if self.client is not None:
            self.client.close()
            self.client = None


def parallel_map(func, items, scheduler=DEFAULT_SCHEDULER):
    """
    Applies func to every item as independent dask tasks and returns the results in input order.
    :param func: picklable callable when the processes scheduler is used
    :param items: iterable of task arguments
    :param scheduler: one of scheduler_types, or None to use the connected distributed client
    :rtype: list
    """
    items = list(items)
    if not items:
        return []
    if scheduler is not None and scheduler not in scheduler_types:
        raise ValueError("Unknown dask scheduler '{}'. Expected one of: {}".format(scheduler,
                                                                                ", ".join(scheduler_types)))
    tasks = [dask.delayed(func)(item) for item in items]
    logger.debug("[Dask] Computing %d tasks with the %s scheduler", len(tasks), scheduler or "distributed")
    if scheduler is None:
        return list(dask.compute(*tasks))
    return list(dask.compute(*tasks, scheduler=scheduler))
