from hoacs.cli import main

main()
