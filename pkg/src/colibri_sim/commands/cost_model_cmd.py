"""Reservation storage cost model."""

import click

from ..adapters import CostScheme
from ..adapters import cost_model as storage_cost
from ..config import SUPPORTED_ADDRESSES_PER_BANK
from ..output import Column, output_data, print_info, print_warning
from .common import output_format

COST_COLUMNS = [
    Column("scheme", "Scheme"),
    Column("identifier_bits", "Identifier bits", ","),
    Column("valid_bits", "Valid bits", ","),
    Column("address_bits", "Address bits", ","),
    Column("total_bits", "Total bits", ","),
]


@click.command("cost-model")
@click.option("--cores", "-n", "n_cores", type=click.IntRange(min=1), required=True)
@click.option("--banks", "-m", "n_banks", type=click.IntRange(min=1), required=True)
@click.option(
    "--scheme",
    type=click.Choice(["all"] + [s.value for s in CostScheme]),
    default="all",
    show_default=True,
)
@click.option("--queue-slots", "-q", type=click.IntRange(min=1), default=1, show_default=True)
@click.option(
    "--addresses-per-bank", "-a", type=click.IntRange(min=1), default=1, show_default=True
)
@click.option("--address-width", type=click.IntRange(min=1), default=32, show_default=True)
@click.pass_context
def cost_model(
    ctx,
    n_cores: int,
    n_banks: int,
    scheme: str,
    queue_slots: int,
    addresses_per_bank: int,
    address_width: int,
):
    """Storage bits each reservation scheme needs on an n-core, m-bank machine."""
    for name, value in (("queue slots", queue_slots), ("addresses per bank", addresses_per_bank)):
        if value not in SUPPORTED_ADDRESSES_PER_BANK:
            print_warning(f"{name}={value} is outside the evaluated range 1, 2, 4, 8")

    schemes = list(CostScheme) if scheme == "all" else [CostScheme(scheme)]
    costs = {
        s: storage_cost(s, n_cores, n_banks, queue_slots, addresses_per_bank, address_width)
        for s in schemes
    }
    fmt = output_format(ctx)
    output_data(
        list(costs.values()),
        COST_COLUMNS,
        format=fmt,
        title=f"Reservation storage, {n_cores} cores x {n_banks} banks",
    )
    if fmt == "table" and CostScheme.IDEAL in costs and CostScheme.COLIBRI in costs:
        ideal = costs[CostScheme.IDEAL].identifier_bits
        colibri = costs[CostScheme.COLIBRI].identifier_bits
        print_info(f"Ideal queues need {ideal / colibri:.1f}x the identifier bits of colibri")
