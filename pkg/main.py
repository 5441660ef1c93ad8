from src.cli import main as cli_main


def main():
    """Entry point for the werner-steady package"""
    cli_main()


if __name__ == "__main__":
    main()
